#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cfsd/checkpoint.hpp"
#include "cfsd/dataset_io.hpp"
#include "cfsd/harness.hpp"
#include "cfsd/rng.hpp"

namespace fs = std::filesystem;
using namespace cfsd;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

RunConfig load_config(const GlobalOpts& g) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = RunConfig::load(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    cfg.validate();
    return cfg;
}

int cmd_gen_data(const GlobalOpts& g) {
    auto cfg = load_config(g);
    const std::string out = resolve_out_dir(g.out, cfg);
    fs::create_directories(out);
    auto data = derive_protocol_data(cfg);
    write_text_file(out + "/styles.manifest", styles_to_manifest(data.styles));
    for (const auto& spec : data.styles) {
        Dataset train, test;
        train.patch_h = test.patch_h = data.patch_h;
        train.patch_w = test.patch_w = data.patch_w;
        train.samples = data.train.at(spec.tag);
        test.samples = data.test.at(spec.tag);
        save_dataset(train, out + "/" + spec.tag + "_train.cfsdat");
        save_dataset(test, out + "/" + spec.tag + "_test.cfsdat");
        std::cout << spec.tag << ": " << train.samples.size() << " train, " << test.samples.size()
                  << " test\n";
    }
    std::cout << "wrote datasets + manifest to " << out << "\n";
    return 0;
}

int cmd_train_base(const GlobalOpts& g) {
    auto cfg = load_config(g);
    const std::string out = resolve_out_dir(g.out, cfg);
    fs::create_directories(out);
    auto data = derive_protocol_data(cfg);
    std::cout << "training base detector (seed " << cfg.seed << ")\n";
    auto base = train_base(data, cfg);
    for (const auto& tr : base.trace)
        std::cout << "  epoch " << tr.epoch << ": val TDR@" << cfg.fdr_target * 100
                  << "%FDR = " << tr.val_tdr_at_fdr * 100 << "%, val CE = " << tr.val_ce
                  << (tr.selected ? "  [selected]" : "") << "\n";
    save_checkpoint(base.params, out + "/base.ckpt");
    Dataset d0;
    d0.patch_h = data.patch_h;
    d0.patch_w = data.patch_w;
    for (const auto& tag : data.base_styles)
        for (const auto& s : data.train.at(tag)) d0.samples.push_back(s);
    auto buffer = ReplayBuffer::init(d0, cfg.n0, mix_seed(cfg.seed, fnv1a64("buffer")));
    write_text_file(out + "/base.buffer", buffer.snapshot());
    std::cout << "wrote " << out << "/base.ckpt and base.buffer\n";
    return 0;
}

int cmd_adapt(const GlobalOpts& g, const std::string& ckpt, const std::string& buffer_path,
              const std::string& dataset_path, std::size_t stage) {
    auto cfg = load_config(g);
    const std::string out = resolve_out_dir(g.out, cfg);
    fs::create_directories(out);
    auto data = derive_protocol_data(cfg);
    auto prev = load_checkpoint(ckpt).params;
    auto buffer = ReplayBuffer::restore(read_text_file(buffer_path), data.train);
    auto dk = load_dataset(dataset_path);
    if (dk.samples.empty()) throw std::runtime_error("adapt: empty dataset");
    auto params = adapt_step(prev, buffer, dk.samples, cfg, stage);
    const std::string name = "step" + std::to_string(stage);
    save_checkpoint(params, out + "/" + name + ".ckpt");
    write_text_file(out + "/" + name + ".buffer", buffer.snapshot());
    std::cout << "adapted to " << dk.samples.front().style << "; wrote " << out << "/" << name
              << ".ckpt\n";
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& ckpt, const std::string& dataset_path,
             const std::string& real_path) {
    auto cfg = load_config(g);
    auto params = load_checkpoint(ckpt).params;
    auto ds = load_dataset(dataset_path);
    std::vector<Sample> reals, syns;
    for (auto& s : ds.samples) (s.label ? syns : reals).push_back(s);
    if (!real_path.empty()) {
        auto rd = load_dataset(real_path);
        for (auto& s : rd.samples)
            if (!s.label) reals.push_back(s);
    }
    if (reals.empty() || syns.empty())
        throw std::runtime_error("eval: need both real and synthetic samples (use --real)");
    ScoreSet ss;
    ss.real_scores = score_samples(params, reals);
    ss.synthetic_scores = score_samples(params, syns);
    auto at_tau = tdr_fdr(ss, cfg.tau);
    auto at_target = tdr_at_fdr(ss, cfg.fdr_target);
    std::printf("samples: %zu real, %zu synthetic\n", reals.size(), syns.size());
    std::printf("TDR@tau=%g      : %.2f%%\n", cfg.tau, at_tau.tdr * 100);
    std::printf("FDR@tau=%g      : %.2f%%\n", cfg.tau, at_tau.fdr * 100);
    std::printf("TDR@%.3g%%FDR    : %.2f%%  (threshold %.6g)\n", cfg.fdr_target * 100,
                at_target.tdr * 100, at_target.threshold);
    return 0;
}

int cmd_run_protocol(const GlobalOpts& g, int stop_after) {
    auto cfg = load_config(g);
    const std::string out = resolve_out_dir(g.out, cfg);
    auto rec = run_protocol(cfg, out, stop_after);
    std::cout << "completed " << rec.stage_names.size() << " stages in " << rec.wall_seconds
              << " s; outputs in " << out << "\n";
    return 0;
}

int cmd_ablate(const GlobalOpts& g, const std::string& which) {
    auto cfg = load_config(g);
    const std::string out = resolve_out_dir(g.out, cfg);
    run_ablations(cfg, which, out);
    std::cout << "ablation reports written to " << out << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const std::string csv = read_text_file(run_dir + "/matrix.csv");
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // header
    std::map<std::string, std::map<std::string, MatrixCell>> rows;
    std::vector<std::string> row_order, col_order;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string ckpt, style, a, b, c;
        std::getline(ls, ckpt, ',');
        std::getline(ls, style, ',');
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        if (ckpt.empty()) continue;
        if (!rows.count(ckpt)) row_order.push_back(ckpt);
        if (rows.empty() || !rows.begin()->second.count(style)) {
            bool seen = false;
            for (const auto& s : col_order) seen = seen || s == style;
            if (!seen) col_order.push_back(style);
        }
        rows[ckpt][style] = {std::stod(a), std::stod(b), std::stod(c)};
    }
    if (fs::exists(run_dir + "/run.meta")) std::cout << read_text_file(run_dir + "/run.meta");
    std::printf("\n%-8s", "");
    for (const auto& s : col_order) std::printf(" %21s", s.c_str());
    std::printf(" %21s\n", "mean");
    std::printf("%-8s", "");
    for (std::size_t i = 0; i <= col_order.size(); ++i) std::printf(" %21s", "tdr/fdr@t tdr@f");
    std::printf("\n");
    for (const auto& r : row_order) {
        std::printf("%-8s", r.c_str());
        MatrixCell mean;
        for (const auto& s : col_order) {
            const auto& c = rows[r][s];
            std::printf("   %5.1f/%5.1f  %5.1f", c.tdr_at_tau * 100, c.fdr_at_tau * 100,
                        c.tdr_at_fdr * 100);
            mean.tdr_at_tau += c.tdr_at_tau;
            mean.fdr_at_tau += c.fdr_at_tau;
            mean.tdr_at_fdr += c.tdr_at_fdr;
        }
        const double n = static_cast<double>(col_order.size());
        std::printf("   %5.1f/%5.1f  %5.1f\n", mean.tdr_at_tau / n * 100, mean.fdr_at_tau / n * 100,
                    mean.tdr_at_fdr / n * 100);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cfsd: continual few-shot synthetic-image detector harness"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "run configuration file")->envname("CFSD_CONFIG");
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the run seed");
    app.add_option("--out", g.out, "output directory (default: config, then $CFSD_OUT)");

    auto* gen = app.add_subcommand("gen-data", "generate protocol datasets + style manifest");
    auto* tb = app.add_subcommand("train-base", "train the base detector");
    auto* ad = app.add_subcommand("adapt", "run one adaptation stage from a checkpoint");
    std::string ad_ckpt, ad_buffer, ad_dataset;
    std::size_t ad_stage = 1;
    ad->add_option("--checkpoint", ad_ckpt, "previous stage checkpoint")->required();
    ad->add_option("--buffer", ad_buffer, "previous stage buffer snapshot")->required();
    ad->add_option("--dataset", ad_dataset, "single-style adaptation dataset (.cfsdat)")->required();
    ad->add_option("--stage", ad_stage, "1-based stage index");
    auto* ev = app.add_subcommand("eval", "score a dataset with a checkpoint and print metrics");
    std::string ev_ckpt, ev_dataset, ev_real;
    ev->add_option("--checkpoint", ev_ckpt, "detector checkpoint")->required();
    ev->add_option("--dataset", ev_dataset, "dataset to score (.cfsdat)")->required();
    ev->add_option("--real", ev_real, "extra real-sample dataset for the FDR side");
    auto* rp = app.add_subcommand("run-protocol", "base training + all adaptation stages");
    int rp_stop = -1;
    rp->add_option("--stop-after", rp_stop, "stop after this adaptation stage (for partial runs)");
    auto* ab = app.add_subcommand("ablate", "replay / shot-count / lambda ablations");
    std::string ab_which = "all";
    ab->add_option("--which", ab_which, "replay|shots|lambda|all");
    auto* rep = app.add_subcommand("report", "pretty-print a run directory's matrix");
    std::string rep_dir;
    rep->add_option("--run", rep_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed_flag;

    try {
        if (gen->parsed()) return cmd_gen_data(g);
        if (tb->parsed()) return cmd_train_base(g);
        if (ad->parsed()) return cmd_adapt(g, ad_ckpt, ad_buffer, ad_dataset, ad_stage);
        if (ev->parsed()) return cmd_eval(g, ev_ckpt, ev_dataset, ev_real);
        if (rp->parsed()) return cmd_run_protocol(g, rp_stop);
        if (ab->parsed()) return cmd_ablate(g, ab_which);
        if (rep->parsed()) return cmd_report(rep_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
