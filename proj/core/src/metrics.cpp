#include "qem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qem {

namespace {

constexpr double kRdCap = 27.631021115928547;  // ln(1e12)

}  // namespace

double mae(const std::vector<std::vector<double>>& predicted,
           const std::vector<std::vector<double>>& truth, MaeMode mode) {
    if (predicted.size() != truth.size() || predicted.empty()) {
        throw std::invalid_argument("mae sequence count mismatch");
    }
    double acc = 0.0;
    std::size_t points = 0;
    for (std::size_t s = 0; s < predicted.size(); ++s) {
        if (predicted[s].size() != truth[s].size() || predicted[s].empty()) {
            throw std::invalid_argument("mae sequence length mismatch");
        }
        if (mode == MaeMode::Point) {
            for (std::size_t l = 0; l < predicted[s].size(); ++l) {
                acc += std::abs(predicted[s][l] - truth[s][l]);
                ++points;
            }
        } else {
            double sq = 0.0;
            for (std::size_t l = 0; l < predicted[s].size(); ++l) {
                const double e = predicted[s][l] - truth[s][l];
                sq += e * e;
            }
            acc += std::sqrt(sq / double(predicted[s].size()));
            ++points;
        }
    }
    return acc / double(points);
}

RdResult rd(double noisy, double mitigated, double truth) {
    const double noisy_err = std::abs(noisy - truth);
    const double mit_err = std::abs(mitigated - truth);
    if (mit_err == 0.0) return {kRdCap, true};
    if (noisy_err == 0.0) return {-kRdCap, true};
    const double value = std::log(noisy_err / mit_err);
    if (value > kRdCap) return {kRdCap, true};
    if (value < -kRdCap) return {-kRdCap, true};
    return {value, false};
}

double theta_estimate(double expectation, std::size_t n) {
    if (n == 0) throw std::invalid_argument("theta_estimate needs n >= 1");
    const double clamped = std::clamp(expectation, -1.0, 1.0);
    return std::acos(clamped) / double(n);
}

double rmse(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw std::invalid_argument("rmse of nothing");
    double acc = 0.0;
    for (double e : estimates) acc += (e - truth) * (e - truth);
    return std::sqrt(acc / double(estimates.size()));
}

FitRate fit_rate(const std::vector<std::pair<double, double>>& target,
                 const std::vector<std::pair<double, double>>& reference) {
    if (target.size() < 2 || reference.size() < 2) {
        throw std::invalid_argument("fit_rate needs >= 2 points");
    }
    for (const auto& [n, v] : target) {
        if (n <= 0.0 || v <= 0.0) {
            throw std::invalid_argument("fit_rate needs positive points");
        }
    }
    // b0 minimizes sum (v - b0 / n^2)^2 over the reference curve.
    double num = 0.0, den = 0.0;
    for (const auto& [n, v] : reference) {
        if (n <= 0.0 || v <= 0.0) {
            throw std::invalid_argument("fit_rate needs positive points");
        }
        num += v / (n * n);
        den += 1.0 / (n * n * n * n);
    }
    const double b0 = num / den;
    // log v = log b0 - r log n with the intercept fixed.
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [n, v] : target) {
        const double x = std::log(n);
        sxy += x * (std::log(b0) - std::log(v));
        sxx += x * x;
    }
    return {b0, sxy / sxx};
}

Eigen::MatrixXd sum_pool(const Eigen::MatrixXd& m, Eigen::Index window) {
    if (window < 1 || m.rows() % window != 0 || m.cols() % window != 0) {
        throw std::invalid_argument("pooling window must divide both sides");
    }
    Eigen::MatrixXd out(m.rows() / window, m.cols() / window);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out(r, c) =
                m.block(r * window, c * window, window, window).sum();
        }
    }
    return out;
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) idx[std::size_t(i)] = i;
    std::sort(idx.begin(), idx.end(),
              [&v](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v(idx[std::size_t(j + 1)]) == v(idx[std::size_t(i)])) {
            ++j;
        }
        const double avg = double(i + j) / 2.0 + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks(idx[std::size_t(k)]) = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("pearson needs matched vectors, n >= 2");
    }
    const Eigen::VectorXd da = a.array() - a.mean();
    const Eigen::VectorXd db = b.array() - b.mean();
    const double va = da.squaredNorm(), vb = db.squaredNorm();
    if (va == 0.0 || vb == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return da.dot(db) / std::sqrt(va * vb);
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return pearson(average_ranks(a), average_ranks(b));
}

Eigen::MatrixXd spearman_matrix(const Eigen::MatrixXd& pooled,
                                const Eigen::MatrixXd& reference) {
    const Eigen::Index wr = reference.rows(), wc = reference.cols();
    if (wr < 1 || pooled.rows() % wr != 0 || pooled.cols() % wc != 0) {
        throw std::invalid_argument("window shape must tile the pooled map");
    }
    Eigen::VectorXd ref_flat =
        Eigen::Map<const Eigen::VectorXd>(reference.data(), reference.size());
    Eigen::MatrixXd out(pooled.rows() / wr, pooled.cols() / wc);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            Eigen::MatrixXd window = pooled.block(r * wr, c * wc, wr, wc);
            Eigen::VectorXd flat =
                Eigen::Map<const Eigen::VectorXd>(window.data(),
                                                  window.size());
            out(r, c) = spearman(flat, ref_flat);
        }
    }
    return out;
}

double differential_entropy(std::vector<double> samples, EntropyMethod method,
                            bool* degenerate) {
    const std::size_t n = samples.size();
    if (n < 10) throw std::invalid_argument("entropy needs >= 10 samples");
    std::sort(samples.begin(), samples.end());
    if (samples.front() == samples.back()) {
        if (degenerate != nullptr) *degenerate = true;
        return -kRdCap;
    }
    if (method == EntropyMethod::Auto) {
        method = n < 1000 ? EntropyMethod::Ebrahimi : EntropyMethod::Vasicek;
    }
    const std::size_t m = std::size_t(std::floor(std::sqrt(double(n))));
    auto at = [&samples, n](std::ptrdiff_t i) {
        if (i < 0) return samples.front();
        if (std::size_t(i) >= n) return samples.back();
        return samples[std::size_t(i)];
    };
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double gap =
            std::max(at(std::ptrdiff_t(i + m) - 1) -
                         at(std::ptrdiff_t(i) - std::ptrdiff_t(m) - 1),
                     1e-300);
        double c = 2.0;
        if (method == EntropyMethod::Ebrahimi) {
            if (i <= m) {
                c = 1.0 + double(i - 1) / double(m);
            } else if (i >= n - m + 1) {
                c = 1.0 + double(n - i) / double(m);
            }
        }
        acc += std::log(double(n) * gap / (c * double(m)));
    }
    return acc / double(n);
}

EntropyCurve entropy_curve(const std::vector<Eigen::VectorXd>& per_step,
                           EntropyMethod method) {
    EntropyCurve curve;
    for (const Eigen::VectorXd& v : per_step) {
        std::vector<double> samples(v.data(), v.data() + v.size());
        bool flag = false;
        curve.values.push_back(differential_entropy(samples, method, &flag));
        curve.degenerate = curve.degenerate || flag;
    }
    return curve;
}

Correspondence entropy_correspondence(
    const std::vector<Eigen::VectorXd>& surrogates,
    const std::vector<Eigen::MatrixXd>& ptms) {
    if (surrogates.size() != ptms.size() || surrogates.size() < 3) {
        throw std::invalid_argument(
            "entropy correspondence needs >= 3 matched layers");
    }
    std::vector<Eigen::VectorXd> flat;
    for (const Eigen::MatrixXd& m : ptms) {
        flat.push_back(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
    }
    const EntropyCurve a = entropy_curve(flat);
    const EntropyCurve b = entropy_curve(surrogates);
    Eigen::VectorXd va = Eigen::Map<const Eigen::VectorXd>(
        a.values.data(), Eigen::Index(a.values.size()));
    Eigen::VectorXd vb = Eigen::Map<const Eigen::VectorXd>(
        b.values.data(), Eigen::Index(b.values.size()));
    Correspondence c;
    c.pearson = pearson(va, vb);
    c.spearman = spearman(va, vb);
    c.defined = std::isfinite(c.pearson) && std::isfinite(c.spearman) &&
                !a.degenerate && !b.degenerate;
    return c;
}

ConfidenceInterval bootstrap_ci(const std::vector<double>& samples,
                                double level, std::size_t resamples,
                                std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("bootstrap of nothing");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    std::vector<double> means(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            acc += samples[pick(rng)];
        }
        means[r] = acc / double(samples.size());
    }
    std::sort(means.begin(), means.end());
    const double alpha = (1.0 - level) / 2.0;
    auto quantile = [&means](double q) {
        const double pos = q * double(means.size() - 1);
        const std::size_t lo = std::size_t(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, means.size() - 1);
        const double frac = pos - double(lo);
        return means[lo] * (1.0 - frac) + means[hi] * frac;
    };
    ConfidenceInterval ci;
    for (double s : samples) ci.mean += s;
    ci.mean /= double(samples.size());
    ci.lo = quantile(alpha);
    ci.hi = quantile(1.0 - alpha);
    return ci;
}

std::string MetricReport::csv_header() {
    return "label,mae_point,mae_seq_norm,rd_point,rmse_theta,fit_rate_r,"
           "ledger_instances,ledger_shots,ledger_total";
}

std::string MetricReport::csv_row() const {
    std::ostringstream os;
    os.precision(12);
    os << label << ',' << mae_point << ',' << mae_seq_norm << ',' << rd_point
       << ',' << rmse_theta << ',' << fit_rate_r << ','
       << overhead.circuit_instances << ',' << overhead.shots_per_instance
       << ',' << overhead.total();
    return os.str();
}

}  // namespace qem
