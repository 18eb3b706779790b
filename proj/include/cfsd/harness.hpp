#pragma once
#include <map>
#include <string>
#include <vector>

#include "cfsd/config.hpp"
#include "cfsd/metrics.hpp"
#include "cfsd/model.hpp"
#include "cfsd/replay.hpp"
#include "cfsd/styledata.hpp"

namespace cfsd {

// All datasets of one protocol run, derived deterministically from the
// config seed: per-style train pools, the fixed per-style test sets, and the
// pooled real test set shared by every evaluation.
struct ProtocolData {
    std::size_t patch_h = 32, patch_w = 32;
    std::vector<StyleSpec> styles;                       // protocol order
    std::map<std::string, std::vector<Sample>> train;    // per style
    std::map<std::string, std::vector<Sample>> test;     // per style
    std::vector<Sample> real_test;                       // pooled
    std::vector<std::string> base_styles;                // reals + S0
    std::vector<std::string> adapt_styles;               // S1..SK in order
    std::string s0_tag;
};

ProtocolData derive_protocol_data(const RunConfig& cfg);

struct EpochTrace {
    std::size_t epoch = 0;
    double val_tdr_at_fdr = 0.0;
    double val_ce = 0.0;
    bool selected = false;
};

struct BaseTrainResult {
    DetectorParams params;
    std::vector<EpochTrace> trace;
};

// CE-only base training with per-epoch validation on a held-out slice of the
// base training set; returns the epoch checkpoint with the best validation
// TDR@0.1%FDR (ties broken by lower validation CE).
BaseTrainResult train_base(const ProtocolData& data, const RunConfig& cfg);

// One continual few-shot stage: extends the buffer with the new single-style
// set, assembles the adaptation set (or uses the new set alone with replay
// disabled) and fine-tunes for adapt_epochs starting from the incoming
// parameters. stage_index is 1-based.
DetectorParams adapt_step(const DetectorParams& prev, ReplayBuffer& buffer,
                          const std::vector<Sample>& dk, const RunConfig& cfg,
                          std::size_t stage_index);

// Batched inference scores in sample order.
std::vector<double> score_samples(const DetectorParams& params, const std::vector<Sample>& samples,
                                  std::size_t batch = 512);

struct RunRecord {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> stage_names;       // "base", "step1", ...
    std::vector<DetectorParams> stage_params;   // aligned with stage_names
    AdaptationMatrix matrix;
    std::vector<EpochTrace> base_trace;
    double wall_seconds = 0.0;
    std::size_t resumed_from_stage = 0;         // 0 = fresh run
};

// Full protocol: base training then sequential adaptation, scoring every
// style test set after every stage. With a nonempty out_dir the run persists
// checkpoints, buffer snapshots, matrix.csv, report.json and run.meta, and a
// rerun picks up at the first incomplete stage. stop_after_stage limits how
// many adaptation stages run (-1 = all).
RunRecord run_protocol(const RunConfig& cfg, const std::string& out_dir = "",
                       int stop_after_stage = -1, bool quiet = false);

struct AblationReports {
    std::string replay_csv;
    std::string shots_csv;
    std::string lambda_csv;
};

// Paired replay on/off runs, shot-count sweep {10,50,100,200} and lambda
// sweep {0,0.01,0.1,1.0}, all sharing the config seed (and the same base
// checkpoint). which: "replay", "shots", "lambda" or "all".
AblationReports run_ablations(const RunConfig& cfg, const std::string& which,
                              const std::string& out_dir = "", bool quiet = false);

}  // namespace cfsd
