#pragma once

// OLS fitting, forward-backward stepwise selection and uptime/avoided performance quadrants.

#include "flexlens/error.hpp"
#include "flexlens/metrics.hpp"
#include "flexlens/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace flexlens {

struct NamedColumn {
    std::string name;
    std::vector<double> values;
};

struct RegressionTerm {
    std::string name;  ///< "intercept" for the constant
    double beta = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 1.0;
};

struct RegressionFit {
    std::string response;
    std::vector<RegressionTerm> terms;  ///< intercept first, then predictors in input order
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::size_t n = 0;
    std::size_t dof = 0;  ///< n - predictors - 1
    double rss = 0.0;

    std::vector<std::string> predictors() const {
        std::vector<std::string> out;
        for (std::size_t i = 1; i < terms.size(); ++i) out.push_back(terms[i].name);
        return out;
    }
    const RegressionTerm* term(const std::string& name) const {
        for (const auto& t : terms)
            if (t.name == name) return &t;
        return nullptr;
    }
};

class RankDeficientError : public InputError {
public:
    using InputError::InputError;
};

class TooFewObservationsError : public InputError {
public:
    using InputError::InputError;
};

/// Least squares with an intercept. Column-pivoted Householder QR; (X'X)^-1 is formed from R.
inline RegressionFit ols_fit(std::span<const NamedColumn> predictors, std::span<const double> y,
                             std::string response = "y") {
    const auto n = y.size();
    const auto k = predictors.size();
    if (n < k + 2)
        throw TooFewObservationsError("ols: need n >= k + 2 (n = " + std::to_string(n) +
                                      ", k = " + std::to_string(k) + ")");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k + 1));
    Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        Y(static_cast<Eigen::Index>(i)) = y[i];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (predictors[j].values.size() != n)
            throw InputError("ols: column '" + predictors[j].name + "' has wrong length");
        for (std::size_t i = 0; i < n; ++i)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = predictors[j].values[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(k + 1)) throw RankDeficientError("ols: predictor matrix is rank deficient");

    const Eigen::VectorXd beta = qr.solve(Y);
    const Eigen::VectorXd resid = Y - X * beta;
    const double rss = resid.squaredNorm();
    const double ybar = Y.mean();
    const double tss = (Y.array() - ybar).square().sum();

    const auto p = static_cast<Eigen::Index>(k + 1);
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv =
        R.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd cov_unscaled_perm = Rinv * Rinv.transpose();
    const Eigen::MatrixXd cov_unscaled =
        qr.colsPermutation() * cov_unscaled_perm * qr.colsPermutation().transpose();

    RegressionFit fit;
    fit.response = std::move(response);
    fit.n = n;
    fit.dof = n - k - 1;
    fit.rss = rss;
    const double sigma2 = rss / static_cast<double>(fit.dof);
    const double dof = static_cast<double>(fit.dof);
    for (Eigen::Index j = 0; j < p; ++j) {
        RegressionTerm term;
        term.name = j == 0 ? "intercept" : predictors[static_cast<std::size_t>(j - 1)].name;
        term.beta = beta(j);
        term.se = std::sqrt(std::max(0.0, sigma2 * cov_unscaled(j, j)));
        if (term.se > 0.0) {
            term.t = term.beta / term.se;
            term.p = stats::student_t_two_sided_p(term.t, dof);
        } else if (term.beta != 0.0) {
            term.t = std::copysign(std::numeric_limits<double>::infinity(), term.beta);
            term.p = 0.0;
        } else {
            term.t = 0.0;
            term.p = 1.0;
        }
        fit.terms.push_back(term);
    }
    fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / dof;
    return fit;
}

enum class StepAction { add, remove, skip };

inline const char* to_string(StepAction a) {
    switch (a) {
        case StepAction::add: return "add";
        case StepAction::remove: return "remove";
        case StepAction::skip: return "skip";
    }
    return "?";
}

struct StepwiseStep {
    StepAction action = StepAction::add;
    std::string variable;
    std::optional<double> p_value;
    std::optional<double> adj_r2_after;
    std::string reason;
};

struct StepwiseResult {
    RegressionFit fit;
    std::vector<StepwiseStep> trace;
};

inline constexpr double kStepwiseAlpha = 0.05;

/// Forward-backward selection. Entry needs p <= alpha AND a higher adjusted R^2 (smallest p
/// wins, ties by name); exit is any retained variable with p > alpha (largest p first).
/// Baseline columns start in the model and are subject to the exit rule like any other.
inline StepwiseResult stepwise_select(std::vector<NamedColumn> baseline, std::vector<NamedColumn> candidates,
                                      std::span<const double> y, double alpha = kStepwiseAlpha,
                                      const std::string& response = "y") {
    std::sort(candidates.begin(), candidates.end(),
              [](const NamedColumn& a, const NamedColumn& b) { return a.name < b.name; });
    StepwiseResult out;
    std::vector<NamedColumn> model = std::move(baseline);
    std::set<std::string> skipped;
    std::set<std::set<std::string>> visited;

    auto in_model = [&](const std::string& name) {
        return std::any_of(model.begin(), model.end(), [&](const NamedColumn& c) { return c.name == name; });
    };
    auto names_of = [](const std::vector<NamedColumn>& cols) {
        std::set<std::string> s;
        for (const auto& c : cols) s.insert(c.name);
        return s;
    };

    auto current = ols_fit(model, y, response);
    visited.insert(names_of(model));
    for (int iteration = 0; iteration < 1000; ++iteration) {
        bool changed = false;

        std::optional<std::size_t> best;
        std::optional<RegressionFit> best_fit;
        double best_p = 0.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const auto& cand = candidates[c];
            if (in_model(cand.name)) continue;
            auto trial = model;
            trial.push_back(cand);
            try {
                auto fit = ols_fit(trial, y, response);
                const double p = fit.terms.back().p;
                if (p <= alpha && fit.adj_r2 > current.adj_r2 && (!best || p < best_p)) {
                    best = c;
                    best_p = p;
                    best_fit = std::move(fit);
                }
            } catch (const RankDeficientError&) {
                if (skipped.insert(cand.name + "/rank").second)
                    out.trace.push_back({StepAction::skip, cand.name, std::nullopt, std::nullopt,
                                         "rank deficient with current model"});
            } catch (const TooFewObservationsError&) {
                if (skipped.insert(cand.name + "/n").second)
                    out.trace.push_back({StepAction::skip, cand.name, std::nullopt, std::nullopt,
                                         "too few observations"});
            }
        }
        if (best) {
            model.push_back(candidates[*best]);
            if (!visited.insert(names_of(model)).second) {
                model.pop_back();
                break;
            }
            current = std::move(*best_fit);
            out.trace.push_back({StepAction::add, candidates[*best].name, best_p, current.adj_r2, {}});
            changed = true;
        }

        for (;;) {
            std::optional<std::size_t> worst;
            double worst_p = alpha;
            for (std::size_t j = 1; j < current.terms.size(); ++j) {
                if (current.terms[j].p > worst_p) {
                    worst = j - 1;
                    worst_p = current.terms[j].p;
                }
            }
            if (!worst) break;
            const auto name = model[*worst].name;
            model.erase(model.begin() + static_cast<std::ptrdiff_t>(*worst));
            current = ols_fit(model, y, response);
            visited.insert(names_of(model));
            out.trace.push_back({StepAction::remove, name, worst_p, current.adj_r2, {}});
            changed = true;
        }
        if (!changed) break;
    }
    out.fit = std::move(current);
    return out;
}

enum class QuadrantMode { mean, p75 };

inline const char* to_string(QuadrantMode m) { return m == QuadrantMode::mean ? "mean" : "p75"; }

inline QuadrantMode parse_quadrant_mode(const std::string& s) {
    if (s == "mean") return QuadrantMode::mean;
    if (s == "p75") return QuadrantMode::p75;
    throw InputError("quadrant mode must be 'mean' or 'p75', got '" + s + "'");
}

struct QuadrantAssignment {
    std::string facility_id;
    double uptime = 0.0;
    double avoided = 0.0;
    bool high_uptime = false;
    bool high_avoided = false;
    double uptime_cut = 0.0;
    double avoided_cut = 0.0;
    QuadrantMode mode = QuadrantMode::mean;

    std::string label() const {
        return std::string(high_uptime ? "High Uptime" : "Low Uptime") + " & " +
               (high_avoided ? "High Avoided Emissions" : "Low Avoided Emissions");
    }
};

/// Fleet cut for one axis. The mean is taken around the first value so identical inputs
/// reproduce that value exactly.
inline double quadrant_cut(std::span<const double> values, QuadrantMode mode) {
    if (mode == QuadrantMode::p75) return stats::percentile({values.begin(), values.end()}, 0.75);
    double acc = 0.0;
    for (double v : values) acc += v - values.front();
    return values.front() + acc / static_cast<double>(values.size());
}

/// Labels each facility high on an axis iff its value is strictly above the fleet cut.
inline std::vector<QuadrantAssignment> quadrant_classify(std::span<const FacilityMetrics> fleet, QuadrantMode mode) {
    if (fleet.size() < 2) throw InputError("quadrant classification needs at least 2 facilities");
    std::vector<double> up, av;
    for (const auto& m : fleet) {
        up.push_back(m.uptime_pct);
        av.push_back(m.avoided);
    }
    const double ucut = quadrant_cut(up, mode), acut = quadrant_cut(av, mode);
    std::vector<QuadrantAssignment> out;
    for (const auto& m : fleet)
        out.push_back({m.facility_id, m.uptime_pct, m.avoided, m.uptime_pct > ucut, m.avoided > acut, ucut, acut, mode});
    return out;
}

}  // namespace flexlens
