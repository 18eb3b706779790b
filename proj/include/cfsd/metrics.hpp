#pragma once
#include <string>
#include <vector>

namespace cfsd {

// Scores of one (checkpoint, test style) evaluation against the shared real
// test set. All scores in [0,1].
struct ScoreSet {
    std::vector<double> real_scores;
    std::vector<double> synthetic_scores;
    std::string checkpoint_id;
    std::string style_id;
};

struct TdrFdr {
    double tdr = 0.0;
    double fdr = 0.0;
};

// TDR = #{synthetic s >= tau}/#synthetic, FDR = #{real s >= tau}/#real.
// The tie s == tau counts as detected.
TdrFdr tdr_fdr(const ScoreSet& scores, double tau);

struct TdrAtFdr {
    double tdr = 0.0;
    double threshold = 1.0;
};

// Smallest threshold drawn from the observed real scores (plus a sentinel
// just above the max) whose empirical FDR does not exceed fdr_target;
// returns the TDR there. Smaller qualifying thresholds admit more detections,
// so this maximizes TDR subject to the FDR budget.
TdrAtFdr tdr_at_fdr(const ScoreSet& scores, double fdr_target = 0.001);

struct MatrixCell {
    double tdr_at_tau = 0.0;
    double fdr_at_tau = 0.0;
    double tdr_at_fdr = 0.0;
};

// Rows = detector checkpoints (base, step1..K), columns = synthetic style
// test sets, each cell evaluated against the one shared real test set. The
// mean column is the arithmetic per-metric mean over the style columns.
struct AdaptationMatrix {
    std::vector<std::string> checkpoint_ids;
    std::vector<std::string> style_ids;
    std::vector<std::vector<MatrixCell>> cells;  // [row][col]
    double tau = 0.5;
    double fdr_target = 0.001;

    std::vector<MatrixCell> row_means() const;
};

// scoresets must hold one entry per (checkpoint, style) pair, grouped in any
// order; cell order in the result follows first appearance.
AdaptationMatrix build_matrix(const std::vector<ScoreSet>& scoresets, double tau,
                              double fdr_target);

// CSV with header checkpoint,style,tdr_at_tau,fdr_at_tau,tdr_at_fdr and one
// row per cell; doubles printed with round-trip precision so equal runs give
// byte-identical files.
std::string matrix_to_csv(const AdaptationMatrix& m);

// Structured report (JSON) with the matrix plus free-form run metadata.
std::string matrix_to_json(const AdaptationMatrix& m,
                           const std::vector<std::pair<std::string, std::string>>& metadata);

std::string format_double(double v);

}  // namespace cfsd
