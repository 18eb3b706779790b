#include "cfsd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace cfsd {

namespace {
void check_scores(const ScoreSet& s) {
    if (s.real_scores.empty() || s.synthetic_scores.empty())
        throw std::invalid_argument("metrics: both score lists must be nonempty");
    for (double v : s.real_scores)
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("metrics: real score outside [0,1]");
    for (double v : s.synthetic_scores)
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("metrics: synthetic score outside [0,1]");
}

double frac_at_or_above(const std::vector<double>& scores, double tau) {
    std::size_t c = 0;
    for (double v : scores)
        if (v >= tau) ++c;
    return static_cast<double>(c) / static_cast<double>(scores.size());
}
}  // namespace

TdrFdr tdr_fdr(const ScoreSet& scores, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tdr_fdr: tau must be in [0,1]");
    check_scores(scores);
    return {frac_at_or_above(scores.synthetic_scores, tau),
            frac_at_or_above(scores.real_scores, tau)};
}

TdrAtFdr tdr_at_fdr(const ScoreSet& scores, double fdr_target) {
    check_scores(scores);
    // FDR(tau) is a step function of tau changing only at observed real
    // scores, so those are the only candidates that matter; the sentinel just
    // above the max always reaches FDR 0.
    std::vector<double> cands = scores.real_scores;
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    const double sentinel = std::nextafter(cands.back(), 2.0);

    TdrAtFdr out;
    out.threshold = sentinel;
    for (double t : cands) {
        if (frac_at_or_above(scores.real_scores, t) <= fdr_target) {
            out.threshold = t;  // candidates ascend, first qualifying is smallest
            break;
        }
    }
    out.tdr = frac_at_or_above(scores.synthetic_scores, out.threshold);
    return out;
}

std::vector<MatrixCell> AdaptationMatrix::row_means() const {
    std::vector<MatrixCell> means;
    means.reserve(cells.size());
    for (const auto& row : cells) {
        MatrixCell m;
        for (const auto& c : row) {
            m.tdr_at_tau += c.tdr_at_tau;
            m.fdr_at_tau += c.fdr_at_tau;
            m.tdr_at_fdr += c.tdr_at_fdr;
        }
        const double n = static_cast<double>(row.size());
        m.tdr_at_tau /= n;
        m.fdr_at_tau /= n;
        m.tdr_at_fdr /= n;
        means.push_back(m);
    }
    return means;
}

AdaptationMatrix build_matrix(const std::vector<ScoreSet>& scoresets, double tau,
                              double fdr_target) {
    AdaptationMatrix m;
    m.tau = tau;
    m.fdr_target = fdr_target;
    for (const auto& s : scoresets) {
        if (std::find(m.checkpoint_ids.begin(), m.checkpoint_ids.end(), s.checkpoint_id) ==
            m.checkpoint_ids.end())
            m.checkpoint_ids.push_back(s.checkpoint_id);
        if (std::find(m.style_ids.begin(), m.style_ids.end(), s.style_id) == m.style_ids.end())
            m.style_ids.push_back(s.style_id);
    }
    m.cells.assign(m.checkpoint_ids.size(), std::vector<MatrixCell>(m.style_ids.size()));
    std::vector<std::vector<char>> filled(m.checkpoint_ids.size(),
                                          std::vector<char>(m.style_ids.size(), 0));
    for (const auto& s : scoresets) {
        const auto r = std::find(m.checkpoint_ids.begin(), m.checkpoint_ids.end(), s.checkpoint_id) -
                       m.checkpoint_ids.begin();
        const auto c =
            std::find(m.style_ids.begin(), m.style_ids.end(), s.style_id) - m.style_ids.begin();
        auto at_tau = tdr_fdr(s, tau);
        auto at_fdr = tdr_at_fdr(s, fdr_target);
        m.cells[r][c] = {at_tau.tdr, at_tau.fdr, at_fdr.tdr};
        filled[r][c] = 1;
    }
    for (const auto& row : filled)
        for (char f : row)
            if (!f) throw std::invalid_argument("build_matrix: missing (checkpoint, style) cell");
    return m;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string matrix_to_csv(const AdaptationMatrix& m) {
    std::string out = "checkpoint,style,tdr_at_tau,fdr_at_tau,tdr_at_fdr\n";
    for (std::size_t r = 0; r < m.checkpoint_ids.size(); ++r)
        for (std::size_t c = 0; c < m.style_ids.size(); ++c) {
            const auto& cell = m.cells[r][c];
            out += m.checkpoint_ids[r] + "," + m.style_ids[c] + "," + format_double(cell.tdr_at_tau) +
                   "," + format_double(cell.fdr_at_tau) + "," + format_double(cell.tdr_at_fdr) + "\n";
        }
    return out;
}

std::string matrix_to_json(const AdaptationMatrix& m,
                           const std::vector<std::pair<std::string, std::string>>& metadata) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : metadata) j["metadata"][k] = v;
    j["tau"] = m.tau;
    j["fdr_target"] = m.fdr_target;
    j["styles"] = m.style_ids;
    auto means = m.row_means();
    j["rows"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.checkpoint_ids.size(); ++r) {
        nlohmann::ordered_json row;
        row["checkpoint"] = m.checkpoint_ids[r];
        row["cells"] = nlohmann::ordered_json::array();
        for (const auto& c : m.cells[r])
            row["cells"].push_back(
                {{"tdr_at_tau", c.tdr_at_tau}, {"fdr_at_tau", c.fdr_at_tau}, {"tdr_at_fdr", c.tdr_at_fdr}});
        row["mean"] = {{"tdr_at_tau", means[r].tdr_at_tau},
                       {"fdr_at_tau", means[r].fdr_at_tau},
                       {"tdr_at_fdr", means[r].tdr_at_fdr}};
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

}  // namespace cfsd
