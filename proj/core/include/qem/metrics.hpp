#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qem/baselines.hpp"

namespace qem {

enum class MaeMode { Point, SeqNorm };

// Point mode: mean |error| over all (sequence, layer) pairs. SeqNorm mode:
// mean over sequences of ||error||_2 / sqrt(L), so both modes agree for
// constant per-layer error.
double mae(const std::vector<std::vector<double>>& predicted,
           const std::vector<std::vector<double>>& truth, MaeMode mode);

struct RdResult {
    double value = 0.0;
    bool capped = false;
};

// RD = ln(|noisy - truth| / |mitigated - truth|), capped at +-ln(1e12).
RdResult rd(double noisy, double mitigated, double truth);

// theta_est = arccos(clamp(expectation)) / n.
double theta_estimate(double expectation, std::size_t n);

double rmse(const std::vector<double>& estimates, double truth);

struct FitRate {
    double b0 = 0.0;
    double r = 0.0;
};

// Fits value = b0 / n^r: b0 from a least-squares fit of the reference curve
// to b0 / n^2, then r from a fixed-intercept log-space regression of the
// target curve. Points are (n, value) with positive values. Pass squared
// RMSE (variance) curves to read precision scaling: variance 1/n is
// shot-noise scaling, 1/n^2 is Heisenberg scaling.
FitRate fit_rate(const std::vector<std::pair<double, double>>& target,
                 const std::vector<std::pair<double, double>>& reference);

// Non-overlapping window sums; both sides must be divisible by `window`.
Eigen::MatrixXd sum_pool(const Eigen::MatrixXd& m, Eigen::Index window);

// Pearson correlation of the average-rank transforms; NaN when either input
// has zero rank variance.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Slides a non-overlapping window of `reference`'s shape over `pooled`;
// each entry is the Spearman correlation of the flattened window with the
// flattened reference (e.g. the surrogate outer product N N^T). Undefined
// entries are NaN.
Eigen::MatrixXd spearman_matrix(const Eigen::MatrixXd& pooled,
                                const Eigen::MatrixXd& reference);

enum class EntropyMethod { Vasicek, Ebrahimi, Auto };

// Spacing-based differential entropy with window m = floor(sqrt(n));
// Auto selects Ebrahimi below 1000 samples, Vasicek otherwise. A constant
// sample is capped at -ln(1e12) with *degenerate set.
double differential_entropy(std::vector<double> samples, EntropyMethod method,
                            bool* degenerate = nullptr);

struct EntropyCurve {
    std::vector<double> values;
    bool degenerate = false;
};

EntropyCurve entropy_curve(const std::vector<Eigen::VectorXd>& per_step,
                           EntropyMethod method = EntropyMethod::Auto);

struct Correspondence {
    double pearson = 0.0;
    double spearman = 0.0;
    bool defined = false;
};

// Correlates the entropy curve of flattened per-layer PTMs with the entropy
// curve of per-layer surrogate vectors (>= 3 layers).
Correspondence entropy_correspondence(
    const std::vector<Eigen::VectorXd>& surrogates,
    const std::vector<Eigen::MatrixXd>& ptms);

struct ConfidenceInterval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile bootstrap of the sample mean.
ConfidenceInterval bootstrap_ci(const std::vector<double>& samples,
                                double level = 0.95,
                                std::size_t resamples = 1000,
                                std::uint64_t seed = 0);

struct MetricReport {
    std::string label;
    double mae_point = 0.0;
    double mae_seq_norm = 0.0;
    double rd_point = 0.0;
    double rmse_theta = 0.0;
    double fit_rate_r = 0.0;
    OverheadLedger overhead;

    static std::string csv_header();
    std::string csv_row() const;
};

}  // namespace qem
