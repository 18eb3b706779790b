#include "cfsd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "cfsd/checkpoint.hpp"
#include "cfsd/dataset_io.hpp"
#include "cfsd/losses.hpp"
#include "cfsd/optim.hpp"
#include "cfsd/rng.hpp"

namespace fs = std::filesystem;

namespace cfsd {

namespace {

void preprocess_samples(std::vector<Sample>& samples, const RunConfig& cfg) {
    if (cfg.arch.identity_extractor()) return;  // feature-vector input mode
    for (auto& s : samples)
        s.pixels = preprocess(s.pixels, cfg.arch.patch_h, cfg.arch.patch_w, cfg.arch.patch_h,
                              cfg.arch.patch_w);
}

struct TrainOptions {
    std::size_t epochs;
    std::size_t batch;
    double lambda;  // 0 = CE only
};

TensorPtr batch_inputs(const std::vector<const Sample*>& batch, std::size_t input_dim) {
    auto x = make_tensor({batch.size(), input_dim});
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i]->pixels.size() != input_dim)
            throw std::invalid_argument("train: sample pixel count != detector input dim");
        std::copy(batch[i]->pixels.begin(), batch[i]->pixels.end(),
                  x->value.begin() + static_cast<std::ptrdiff_t>(i * input_dim));
    }
    return x;
}

// Epoch order: global shuffle by default; the balanced option deals classes
// round-robin by their overall ratio so every batch sees both classes.
std::vector<std::size_t> epoch_order(const std::vector<const Sample*>& data, Rng& rng,
                                     bool balanced) {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (!balanced) {
        rng.shuffle(order);
        return order;
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i) (data[i]->label ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    order.clear();
    std::size_t ip = 0, in = 0;
    while (ip < pos.size() || in < neg.size()) {
        const double want_pos = static_cast<double>(pos.size()) /
                                static_cast<double>(pos.size() + neg.size());
        const double have = static_cast<double>(order.size());
        const double pos_frac = have == 0.0 ? 0.0 : static_cast<double>(ip) / have;
        if (in >= neg.size() || (ip < pos.size() && pos_frac < want_pos))
            order.push_back(pos[ip++]);
        else
            order.push_back(neg[in++]);
    }
    return order;
}

DetectorParams train_stage(DetectorParams params, const std::vector<const Sample*>& data,
                           const RunConfig& cfg, const TrainOptions& opt, std::size_t stage_index) {
    const std::size_t n = data.size();
    if (n == 0) throw std::invalid_argument("train: empty training set");
    const std::size_t batches = (n + opt.batch - 1) / opt.batch;
    AdamWConfig ocfg;
    ocfg.lr_max = cfg.lr_max;
    ocfg.lr_min = cfg.lr_min;
    ocfg.weight_decay = cfg.weight_decay;
    ocfg.total_steps = opt.epochs * batches;
    OptState state(ocfg, params.all());

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, stage_index, epoch));
        auto order = epoch_order(data, rng, cfg.balanced_batches);
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * opt.batch;
            const std::size_t hi = std::min(lo + opt.batch, n);
            std::vector<const Sample*> chunk;
            chunk.reserve(hi - lo);
            std::vector<int> labels;
            labels.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                chunk.push_back(data[order[i]]);
                labels.push_back(data[order[i]]->label);
            }
            auto x = batch_inputs(chunk, params.arch.input_dim());
            Tape tape;
            auto fwd = detector_forward(params, x, &tape);
            // SC needs pairwise structure; a stray 1-sample tail batch is CE only
            const double lam = (opt.lambda > 0.0 && chunk.size() >= 2) ? opt.lambda : 0.0;
            auto loss = combined_loss_node(tape, fwd.scores, fwd.features, labels, lam, cfg.beta,
                                           cfg.supcon_norm);
            tape.backward(loss);
            adamw_step(params.all(), state);
        }
    }
    return params;
}

ScoreSet make_scoreset(const std::vector<double>& real_scores, const DetectorParams& params,
                       const std::vector<Sample>& syn_test, const std::string& ckpt_id,
                       const std::string& style_id) {
    ScoreSet s;
    s.real_scores = real_scores;
    s.synthetic_scores = score_samples(params, syn_test);
    s.checkpoint_id = ckpt_id;
    s.style_id = style_id;
    return s;
}

std::string stage_name(std::size_t k) { return k == 0 ? "base" : "step" + std::to_string(k); }

}  // namespace

ProtocolData derive_protocol_data(const RunConfig& cfg) {
    cfg.validate();
    ProtocolData data;
    data.patch_h = cfg.arch.patch_h;
    data.patch_w = cfg.arch.patch_w;
    data.styles = cfg.protocol_styles();

    bool seen_synthetic = false;
    for (const auto& spec : data.styles) {
        std::size_t n_train, n_test;
        if (!spec.synthetic) {
            n_train = cfg.real_train;
            n_test = cfg.real_test;
        } else if (!seen_synthetic) {
            n_train = cfg.s0_train;
            n_test = cfg.s0_test;
            data.s0_tag = spec.tag;
            seen_synthetic = true;
        } else {
            n_train = cfg.shots;
            n_test = cfg.adapt_test;
        }
        Dataset pool;
        pool.patch_h = data.patch_h;
        pool.patch_w = data.patch_w;
        pool.samples = gen_style(spec, n_train + n_test, mix_seed(cfg.seed, fnv1a64("data")),
                                 data.patch_h, data.patch_w);
        const double frac = static_cast<double>(n_test) / static_cast<double>(n_train + n_test);
        auto sp = split(pool, frac, mix_seed(cfg.seed, fnv1a64("split")));
        preprocess_samples(sp.train.samples, cfg);
        preprocess_samples(sp.test.samples, cfg);
        data.train[spec.tag] = std::move(sp.train.samples);
        data.test[spec.tag] = std::move(sp.test.samples);

        if (!spec.synthetic) {
            data.base_styles.push_back(spec.tag);
            for (const auto& s : data.test[spec.tag]) data.real_test.push_back(s);
        } else if (spec.tag == data.s0_tag) {
            data.base_styles.push_back(spec.tag);
        } else {
            data.adapt_styles.push_back(spec.tag);
        }
    }
    if (!seen_synthetic) throw std::invalid_argument("protocol: no synthetic style");
    if (data.real_test.empty()) throw std::invalid_argument("protocol: no real styles");
    return data;
}

BaseTrainResult train_base(const ProtocolData& data, const RunConfig& cfg) {
    // assemble D0 and hold out a validation slice per style
    Dataset d0;
    d0.patch_h = data.patch_h;
    d0.patch_w = data.patch_w;
    for (const auto& tag : data.base_styles)
        for (const auto& s : data.train.at(tag)) d0.samples.push_back(s);
    bool has_real = false, has_syn = false;
    for (const auto& s : d0.samples) (s.label ? has_syn : has_real) = true;
    if (!has_real || !has_syn)
        throw std::invalid_argument("train_base: initial dataset must contain both classes");

    auto sp = split(d0, cfg.validation_fraction, mix_seed(cfg.seed, fnv1a64("validation")));
    std::vector<const Sample*> fit;
    fit.reserve(sp.train.samples.size());
    for (const auto& s : sp.train.samples) fit.push_back(&s);
    std::vector<Sample> val_real, val_syn;
    for (const auto& s : sp.test.samples) (s.label ? val_syn : val_real).push_back(s);
    std::vector<int> val_labels;
    for (const auto& s : sp.test.samples) val_labels.push_back(s.label);

    DetectorParams params = init_detector(cfg.arch, mix_seed(cfg.seed, fnv1a64("init")));
    BaseTrainResult best;
    double best_tdr = -1.0, best_ce = 1e300;

    // CE-only training with between-epoch validation
    const std::size_t n = fit.size();
    const std::size_t batches = (n + cfg.base_batch - 1) / cfg.base_batch;
    AdamWConfig ocfg;
    ocfg.lr_max = cfg.lr_max;
    ocfg.lr_min = cfg.lr_min;
    ocfg.weight_decay = cfg.weight_decay;
    ocfg.total_steps = cfg.base_epochs * batches;
    OptState state(ocfg, params.all());
    for (std::size_t epoch = 0; epoch < cfg.base_epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, 0, epoch));  // stage index 0 = base
        auto order = epoch_order(fit, rng, cfg.balanced_batches);
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * cfg.base_batch;
            const std::size_t hi = std::min(lo + cfg.base_batch, n);
            std::vector<const Sample*> chunk;
            std::vector<int> labels;
            for (std::size_t i = lo; i < hi; ++i) {
                chunk.push_back(fit[order[i]]);
                labels.push_back(fit[order[i]]->label);
            }
            auto x = batch_inputs(chunk, params.arch.input_dim());
            Tape tape;
            auto fwd = detector_forward(params, x, &tape);
            auto loss = ce_loss_node(tape, fwd.scores, labels);
            tape.backward(loss);
            adamw_step(params.all(), state);
        }

        ScoreSet vs;
        vs.real_scores = score_samples(params, val_real);
        vs.synthetic_scores = score_samples(params, val_syn);
        const double vtdr = tdr_at_fdr(vs, cfg.fdr_target).tdr;
        std::vector<double> all_scores = score_samples(params, sp.test.samples);
        const double vce = ce_loss(all_scores, val_labels).value;
        EpochTrace tr{epoch + 1, vtdr, vce, false};
        if (vtdr > best_tdr || (vtdr == best_tdr && vce < best_ce)) {
            best_tdr = vtdr;
            best_ce = vce;
            best.params = params.clone();
            for (auto& t : best.trace) t.selected = false;
            tr.selected = true;
        }
        best.trace.push_back(tr);
    }
    return best;
}

DetectorParams adapt_step(const DetectorParams& prev, ReplayBuffer& buffer,
                          const std::vector<Sample>& dk, const RunConfig& cfg,
                          std::size_t stage_index) {
    if (dk.empty()) throw std::invalid_argument("adapt_step: empty adaptation set");
    if (buffer.has_style(dk.front().style))
        throw std::invalid_argument("adapt_step: style '" + dk.front().style +
                                    "' already known (protocol violation)");
    buffer.extend(dk);
    std::vector<Sample> assembled;
    if (cfg.replay) {
        assembled = buffer.assemble();
    } else {
        assembled = dk;
    }
    std::vector<const Sample*> data;
    data.reserve(assembled.size());
    for (const auto& s : assembled) data.push_back(&s);
    TrainOptions opt{cfg.adapt_epochs, cfg.adapt_batch, cfg.lambda};
    return train_stage(prev.clone(), data, cfg, opt, stage_index);
}

std::vector<double> score_samples(const DetectorParams& params, const std::vector<Sample>& samples,
                                  std::size_t batch) {
    std::vector<double> out;
    out.reserve(samples.size());
    const std::size_t input_dim = params.arch.input_dim();
    for (std::size_t lo = 0; lo < samples.size(); lo += batch) {
        const std::size_t hi = std::min(lo + batch, samples.size());
        std::vector<const Sample*> chunk;
        chunk.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) chunk.push_back(&samples[i]);
        auto x = batch_inputs(chunk, input_dim);
        auto fwd = detector_forward(params, x, nullptr);
        out.insert(out.end(), fwd.scores->value.begin(), fwd.scores->value.end());
    }
    return out;
}

RunRecord run_protocol(const RunConfig& cfg, const std::string& out_dir, int stop_after_stage,
                       bool quiet) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    auto data = derive_protocol_data(cfg);

    RunRecord rec;
    rec.config_hash = cfg.hash();
    rec.seed = cfg.seed;

    const bool persist = !out_dir.empty();
    if (persist) fs::create_directories(out_dir);
    auto ckpt_path = [&](std::size_t k) { return out_dir + "/" + stage_name(k) + ".ckpt"; };
    auto buf_path = [&](std::size_t k) { return out_dir + "/" + stage_name(k) + ".buffer"; };

    const std::size_t total_stages = data.adapt_styles.size();
    const std::size_t run_stages =
        stop_after_stage < 0 ? total_stages
                             : std::min<std::size_t>(total_stages, stop_after_stage);

    // resume: reuse persisted stage checkpoints when config hash matches
    std::size_t done = 0;
    ReplayBuffer buffer;
    if (persist && fs::exists(out_dir + "/run.meta")) {
        const std::string meta = read_text_file(out_dir + "/run.meta");
        std::istringstream ms(meta);
        std::string line;
        bool hash_ok = false;
        while (std::getline(ms, line))
            if (line == "config_hash = " + std::to_string(cfg.hash())) hash_ok = true;
        if (hash_ok) {
            while (done <= total_stages && fs::exists(ckpt_path(done)) &&
                   fs::exists(buf_path(done)))
                ++done;
            // done now counts completed stages + 1 for base if present
        } else if (!quiet) {
            std::cout << "[protocol] config changed, ignoring prior run state\n";
        }
    }

    DetectorParams params;
    if (done > 0) {
        rec.resumed_from_stage = done;
        if (!quiet) std::cout << "[protocol] resuming after " << stage_name(done - 1) << "\n";
        params = load_checkpoint(ckpt_path(done - 1)).params;
        buffer = ReplayBuffer::restore(read_text_file(buf_path(done - 1)), data.train);
        for (std::size_t k = 0; k < done; ++k) {
            rec.stage_names.push_back(stage_name(k));
            rec.stage_params.push_back(load_checkpoint(ckpt_path(k)).params);
        }
    } else {
        if (!quiet) std::cout << "[protocol] training base detector (seed " << cfg.seed << ")\n";
        auto base = train_base(data, cfg);
        params = std::move(base.params);
        rec.base_trace = std::move(base.trace);
        Dataset d0;
        d0.patch_h = data.patch_h;
        d0.patch_w = data.patch_w;
        for (const auto& tag : data.base_styles)
            for (const auto& s : data.train.at(tag)) d0.samples.push_back(s);
        buffer = ReplayBuffer::init(d0, cfg.n0, mix_seed(cfg.seed, fnv1a64("buffer")));
        rec.stage_names.push_back("base");
        rec.stage_params.push_back(params.clone());
        if (persist) {
            save_checkpoint(params, ckpt_path(0));
            write_text_file(buf_path(0), buffer.snapshot());
        }
        done = 1;
    }

    for (std::size_t k = done; k <= run_stages; ++k) {
        const std::string& tag = data.adapt_styles[k - 1];
        if (!quiet) std::cout << "[protocol] stage " << k << ": adapting to " << tag << "\n";
        params = adapt_step(params, buffer, data.train.at(tag), cfg, k);
        rec.stage_names.push_back(stage_name(k));
        rec.stage_params.push_back(params.clone());
        if (persist) {
            save_checkpoint(params, ckpt_path(k));
            write_text_file(buf_path(k), buffer.snapshot());
        }
    }

    // score every stage on every synthetic test set against the shared reals
    std::vector<ScoreSet> sets;
    std::vector<std::string> syn_styles;
    syn_styles.push_back(data.s0_tag);
    for (const auto& t : data.adapt_styles) syn_styles.push_back(t);
    for (std::size_t k = 0; k < rec.stage_params.size(); ++k) {
        auto real_scores = score_samples(rec.stage_params[k], data.real_test);
        for (const auto& tag : syn_styles)
            sets.push_back(make_scoreset(real_scores, rec.stage_params[k], data.test.at(tag),
                                         rec.stage_names[k], tag));
    }
    rec.matrix = build_matrix(sets, cfg.tau, cfg.fdr_target);

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    if (persist) {
        write_text_file(out_dir + "/matrix.csv", matrix_to_csv(rec.matrix));
        std::vector<std::pair<std::string, std::string>> meta = {
            {"config_hash", std::to_string(rec.config_hash)},
            {"seed", std::to_string(rec.seed)},
            {"stages", std::to_string(rec.stage_names.size())},
        };
        write_text_file(out_dir + "/report.json", matrix_to_json(rec.matrix, meta));
        std::ostringstream ms;
        ms << "cfsd-run v1\n";
        ms << "config_hash = " << rec.config_hash << "\n";
        ms << "seed = " << rec.seed << "\n";
        ms << "completed_stages = " << rec.stage_names.size() << "\n";
        ms << "wall_seconds = " << rec.wall_seconds << "\n";
        write_text_file(out_dir + "/run.meta", ms.str());
        write_text_file(out_dir + "/config.cfg", cfg.serialize());
    }
    return rec;
}

AblationReports run_ablations(const RunConfig& cfg, const std::string& which,
                              const std::string& out_dir, bool quiet) {
    cfg.validate();
    AblationReports rep;
    const bool all = which == "all";
    if (!all && which != "replay" && which != "shots" && which != "lambda")
        throw std::invalid_argument("run_ablations: which must be replay|shots|lambda|all");
    if (!out_dir.empty()) fs::create_directories(out_dir);

    if (all || which == "replay") {
        RunConfig on = cfg;
        on.replay = true;
        RunConfig off = cfg;
        off.replay = false;
        auto ron = run_protocol(on, "", -1, quiet);
        auto roff = run_protocol(off, "", -1, quiet);
        std::ostringstream os;
        os << "stage,style,replay,tdr_at_tau,fdr_at_tau,tdr_at_fdr\n";
        for (const auto* rr : {&ron, &roff}) {
            const bool is_on = rr == &ron;
            for (std::size_t k = 0; k < rr->stage_names.size(); ++k)
                for (std::size_t c = 0; c < rr->matrix.style_ids.size(); ++c) {
                    const auto& cell = rr->matrix.cells[k][c];
                    os << rr->stage_names[k] << "," << rr->matrix.style_ids[c] << ","
                       << (is_on ? "on" : "off") << "," << format_double(cell.tdr_at_tau) << ","
                       << format_double(cell.fdr_at_tau) << "," << format_double(cell.tdr_at_fdr)
                       << "\n";
                }
        }
        rep.replay_csv = os.str();
        if (!out_dir.empty()) write_text_file(out_dir + "/replay_ablation.csv", rep.replay_csv);
    }

    if (all || which == "shots") {
        std::ostringstream os;
        os << "shots,stage,style,tdr_at_tau,tdr_at_fdr\n";
        for (std::size_t shots : {std::size_t{10}, std::size_t{50}, std::size_t{100},
                                  std::size_t{200}}) {
            RunConfig c = cfg;
            c.shots = shots;
            auto r = run_protocol(c, "", -1, quiet);
            for (std::size_t k = 1; k < r.stage_names.size(); ++k) {
                const std::string& tag = r.matrix.style_ids[k];  // diagonal style
                const auto col = std::find(r.matrix.style_ids.begin(), r.matrix.style_ids.end(),
                                           tag) -
                                 r.matrix.style_ids.begin();
                const auto& cell = r.matrix.cells[k][static_cast<std::size_t>(col)];
                os << shots << "," << r.stage_names[k] << "," << tag << ","
                   << format_double(cell.tdr_at_tau) << "," << format_double(cell.tdr_at_fdr)
                   << "\n";
            }
        }
        rep.shots_csv = os.str();
        if (!out_dir.empty()) write_text_file(out_dir + "/shots_ablation.csv", rep.shots_csv);
    }

    if (all || which == "lambda") {
        std::ostringstream os;
        os << "lambda,stage,style,tdr_at_tau,fdr_at_tau,tdr_at_fdr\n";
        for (double lam : {0.0, 0.01, 0.1, 1.0}) {
            RunConfig c = cfg;
            c.lambda = lam;
            auto r = run_protocol(c, "", -1, quiet);
            for (std::size_t k = 0; k < r.stage_names.size(); ++k)
                for (std::size_t col = 0; col < r.matrix.style_ids.size(); ++col) {
                    const auto& cell = r.matrix.cells[k][col];
                    os << format_double(lam) << "," << r.stage_names[k] << ","
                       << r.matrix.style_ids[col] << "," << format_double(cell.tdr_at_tau) << ","
                       << format_double(cell.fdr_at_tau) << "," << format_double(cell.tdr_at_fdr)
                       << "\n";
                }
        }
        rep.lambda_csv = os.str();
        if (!out_dir.empty()) write_text_file(out_dir + "/lambda_sweep.csv", rep.lambda_csv);
    }
    return rep;
}

}  // namespace cfsd
