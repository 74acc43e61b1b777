#pragma once

// Ridge regression of VAT on feature vectors, repeated random-split
// cross-validation, evaluation metrics, estimate fusion and BMI-stratified
// correlations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wristvat/detail/numeric.hpp"
#include "wristvat/error.hpp"
#include "wristvat/ingest.hpp"

namespace wristvat {

inline constexpr double kDefaultRidgeLambda = 0.1;

inline const std::array<std::string, 6>& covariate_names() {
    static const std::array<std::string, 6> n = {"cov_age",       "cov_gender", "cov_height_cm",
                                                 "cov_weight_kg", "cov_bmi",    "cov_waist_cm"};
    return n;
}

/// (age, gender, height, weight, BMI, waist); gender male = 0, female = 1.
inline std::array<double, 6> covariate_vector(const SubjectRecord& s) {
    if (!s.has_all_covariates()) throw MissingCovariate("subject '" + s.subject_id + "' lacks a covariate");
    return {*s.age_years, *s.gender == Gender::female ? 1.0 : 0.0, *s.height_cm, *s.weight_kg, *s.bmi_kg_m2,
            *s.waist_cm};
}

struct DesignMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> columns;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }

    void validate() const {
        if (static_cast<std::size_t>(x.cols()) != columns.size()) throw LengthMismatch("column name count mismatch");
        if (x.rows() != y.size()) throw LengthMismatch("target length mismatch");
        if (!row_ids.empty() && row_ids.size() != rows()) throw LengthMismatch("row id count mismatch");
        if (std::set<std::string>(columns.begin(), columns.end()).size() != columns.size())
            throw DataError("duplicate column names");
        if (!x.allFinite() || !y.allFinite()) throw DataError("design matrix has missing values");
    }

    DesignMatrix select_rows(std::span<const std::size_t> idx) const {
        DesignMatrix d;
        d.columns = columns;
        d.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
        d.y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto src = static_cast<Eigen::Index>(idx[r]);
            d.x.row(static_cast<Eigen::Index>(r)) = x.row(src);
            d.y(static_cast<Eigen::Index>(r)) = y(src);
            if (!row_ids.empty()) d.row_ids.push_back(row_ids[idx[r]]);
        }
        return d;
    }
};

enum class LambdaScaling {
    n,    // penalty lambda * n_train * I
    raw,  // penalty lambda * I
};

struct RidgeOptions {
    double lambda = kDefaultRidgeLambda;
    LambdaScaling scaling = LambdaScaling::n;
};

struct RegressionModel {
    std::vector<std::string> feature_names;
    std::vector<bool> active;  // false for zero-variance training columns
    Eigen::VectorXd column_means;
    Eigen::VectorXd column_stds;  // 1 for dropped columns
    Eigen::VectorXd weights;      // standardized space; 0 for dropped columns
    double intercept = 0.0;
    double ridge_lambda = kDefaultRidgeLambda;
    LambdaScaling scaling = LambdaScaling::n;

    std::vector<std::string> dropped_columns() const {
        std::vector<std::string> out;
        for (std::size_t j = 0; j < active.size(); ++j)
            if (!active[j]) out.push_back(feature_names[j]);
        return out;
    }

    double predict_row(std::span<const double> f) const {
        if (f.size() != feature_names.size()) throw FeatureMismatch("feature count mismatch");
        double v = intercept;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const auto k = static_cast<Eigen::Index>(j);
            if (active[j]) v += weights(k) * (f[j] - column_means(k)) / column_stds(k);
        }
        return v;
    }
};

/// Standardize columns on the training rows (zero-variance columns dropped),
/// center the target, and solve (Z'Z + penalty I) w = Z'(y - mean y) with an
/// unpenalized intercept equal to mean(y).
inline RegressionModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const std::vector<std::string>& names, const RidgeOptions& opt = {}) {
    if (!(opt.lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
    if (x.rows() != y.size() || static_cast<std::size_t>(x.cols()) != names.size())
        throw LengthMismatch("design matrix shape mismatch");
    if (x.rows() < 2) throw TooFewRows("ridge fit needs at least 2 rows");

    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    RegressionModel m;
    m.feature_names = names;
    m.active.assign(static_cast<std::size_t>(p), false);
    m.column_means = Eigen::VectorXd::Zero(p);
    m.column_stds = Eigen::VectorXd::Ones(p);
    m.weights = Eigen::VectorXd::Zero(p);
    m.ridge_lambda = opt.lambda;
    m.scaling = opt.scaling;

    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::VectorXd col = x.col(j);
        const auto mv = detail::mean_var(std::span<const double>(col.data(), static_cast<std::size_t>(n)));
        m.column_means(j) = mv.mean;
        if (detail::negligible_variance(mv.var, mv.mean)) continue;
        m.column_stds(j) = std::sqrt(mv.var);
        m.active[static_cast<std::size_t>(j)] = true;
        keep.push_back(j);
    }
    if (keep.empty()) throw DegenerateDesign("all feature columns have zero variance");

    const auto q = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd z(n, q);
    for (Eigen::Index k = 0; k < q; ++k) {
        const Eigen::Index j = keep[static_cast<std::size_t>(k)];
        z.col(k) = (x.col(j).array() - m.column_means(j)) / m.column_stds(j);
    }
    m.intercept = y.mean();
    const Eigen::VectorXd yc = y.array() - m.intercept;

    const double penalty = opt.scaling == LambdaScaling::n ? opt.lambda * static_cast<double>(n) : opt.lambda;
    Eigen::MatrixXd a = z.transpose() * z;
    a.diagonal().array() += penalty;
    const Eigen::VectorXd b = z.transpose() * yc;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("ridge normal equations could not be factored");
    const Eigen::VectorXd w = ldlt.solve(b);
    for (Eigen::Index k = 0; k < q; ++k) m.weights(keep[static_cast<std::size_t>(k)]) = w(k);
    return m;
}

inline RegressionModel ridge_fit(const DesignMatrix& d, const RidgeOptions& opt = {}) {
    return ridge_fit(d.x, d.y, d.columns, opt);
}

/// Predictions for each row; the column names must equal the training columns.
inline Eigen::VectorXd ridge_predict(const RegressionModel& m, const Eigen::MatrixXd& x,
                                     const std::vector<std::string>& names) {
    if (names != m.feature_names) throw FeatureMismatch("feature columns differ from the training columns");
    Eigen::VectorXd out(x.rows());
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(r, j);
        out(r) = m.predict_row(row);
    }
    return out;
}

inline Eigen::VectorXd ridge_predict(const RegressionModel& m, const DesignMatrix& d) {
    return ridge_predict(m, d.x, d.columns);
}

// ---------------------------------------------------------------------------
// Correlations and metrics

inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw LengthMismatch("correlation inputs differ in length");
    if (a.size() < 2) throw ConstantInput("correlation needs at least 2 values");
    const auto ma = detail::mean_var(a);
    const auto mb = detail::mean_var(b);
    if (detail::negligible_variance(ma.var, ma.mean) || detail::negligible_variance(mb.var, mb.mean))
        throw ConstantInput("correlation of a constant input");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma.mean) * (b[i] - mb.mean);
    const double r = s / (static_cast<double>(a.size()) * std::sqrt(ma.var * mb.var));
    return std::clamp(r, -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw LengthMismatch("correlation inputs differ in length");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

struct Metrics {
    double spearman = 0.0;
    double pearson = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
};

inline Metrics metrics(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("prediction and target lengths differ");
    Metrics m;
    m.spearman = spearman(y_true, y_pred);
    m.pearson = pearson(y_true, y_pred);
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_pred[i] - y_true[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    const double n = static_cast<double>(y_true.size());
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    return m;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvOptions {
    std::size_t repeats = 30;
    double train_frac = 0.8;
    std::uint64_t seed = 0;
    RidgeOptions ridge{};
};

struct MetricStat {
    double mean = 0.0;
    double std = 0.0;  // population, across folds
};

struct FoldResult {
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    Metrics metrics;
    std::vector<std::string> dropped_columns;
};

struct EvalReport {
    std::vector<FoldResult> folds;
    MetricStat spearman, pearson, mae, rmse;
    /// Per input row: mean prediction over the folds in which the row was a
    /// test row (NaN if it never was), and that fold count.
    std::vector<double> mean_test_prediction;
    std::vector<std::size_t> test_counts;
};

/// Uniform integer in [0, bound) by rejection, independent of the standard
/// library's distribution implementations.
inline std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % bound;
}

/// Fisher-Yates permutation of 0..n-1 seeded with `seed`.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[bounded_uniform(rng, i)]);
    return p;
}

inline MetricStat summarize_metric(const std::vector<FoldResult>& folds, double Metrics::*field) {
    MetricStat s;
    if (folds.empty()) return s;
    for (const auto& f : folds) s.mean += f.metrics.*field;
    s.mean /= static_cast<double>(folds.size());
    for (const auto& f : folds) s.std += (f.metrics.*field - s.mean) * (f.metrics.*field - s.mean);
    s.std = std::sqrt(s.std / static_cast<double>(folds.size()));
    return s;
}

/// Repeated random train/test splits. Repeat r shuffles the rows with seed
/// (seed + r), trains on the first round(train_frac * n) and tests on the rest.
inline EvalReport cross_validate(const DesignMatrix& d, const CvOptions& opt = {}) {
    d.validate();
    const std::size_t n = d.rows();
    if (n < 10) throw TooFewRows("cross-validation needs at least 10 rows");
    if (!(opt.train_frac > 0.0 && opt.train_frac < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
    if (opt.repeats == 0) throw ConfigError("at least one repeat is required");
    auto n_train = static_cast<std::size_t>(std::llround(opt.train_frac * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 2, n - 2);

    EvalReport rep;
    rep.mean_test_prediction.assign(n, 0.0);
    rep.test_counts.assign(n, 0);
    for (std::size_t r = 0; r < opt.repeats; ++r) {
        const std::uint64_t seed = opt.seed + r;
        const auto perm = seeded_permutation(n, seed);
        const std::span<const std::size_t> train(perm.data(), n_train);
        const std::span<const std::size_t> test(perm.data() + n_train, n - n_train);

        const auto model = ridge_fit(d.select_rows(train), opt.ridge);
        const auto test_rows = d.select_rows(test);
        const Eigen::VectorXd pred = ridge_predict(model, test_rows);

        FoldResult f;
        f.repeat = r;
        f.seed = seed;
        f.n_train = train.size();
        f.n_test = test.size();
        f.metrics = metrics(std::span<const double>(test_rows.y.data(), test.size()),
                            std::span<const double>(pred.data(), test.size()));
        f.dropped_columns = model.dropped_columns();
        rep.folds.push_back(std::move(f));
        for (std::size_t k = 0; k < test.size(); ++k) {
            rep.mean_test_prediction[test[k]] += pred(static_cast<Eigen::Index>(k));
            ++rep.test_counts[test[k]];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        rep.mean_test_prediction[i] = rep.test_counts[i] > 0
                                          ? rep.mean_test_prediction[i] / static_cast<double>(rep.test_counts[i])
                                          : std::numeric_limits<double>::quiet_NaN();
    rep.spearman = summarize_metric(rep.folds, &Metrics::spearman);
    rep.pearson = summarize_metric(rep.folds, &Metrics::pearson);
    rep.mae = summarize_metric(rep.folds, &Metrics::mae);
    rep.rmse = summarize_metric(rep.folds, &Metrics::rmse);
    return rep;
}

// ---------------------------------------------------------------------------
// Fusion and stratification

/// Pointwise weighted average of several estimate vectors. Weights must match
/// the number of estimates and sum to 1.
inline std::vector<double> fuse_estimates(std::span<const std::vector<double>> estimates,
                                          std::span<const double> weights) {
    if (estimates.empty() || estimates.size() != weights.size())
        throw WeightMismatch("one weight per estimate is required");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw WeightMismatch("weights must sum to 1");
    const std::size_t n = estimates.front().size();
    for (const auto& e : estimates)
        if (e.size() != n) throw LengthMismatch("estimate vectors differ in length");
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < estimates.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) out[i] += weights[k] * estimates[k][i];
    return out;
}

enum class BmiCategory { all, normal, overweight_or_obese, overweight, obese };

inline std::string to_string(BmiCategory c) {
    switch (c) {
        case BmiCategory::all: return "all";
        case BmiCategory::normal: return "normal";
        case BmiCategory::overweight_or_obese: return "overweight_or_obese";
        case BmiCategory::overweight: return "overweight";
        case BmiCategory::obese: return "obese";
    }
    return "?";
}

inline bool in_category(BmiCategory c, double bmi) {
    switch (c) {
        case BmiCategory::all: return true;
        case BmiCategory::normal: return bmi < 25.0;
        case BmiCategory::overweight_or_obese: return bmi >= 25.0;
        case BmiCategory::overweight: return bmi >= 25.0 && bmi < 30.0;
        case BmiCategory::obese: return bmi >= 30.0;
    }
    return false;
}

/// Spearman correlation restricted to one BMI category (at least 3 members).
inline double category_spearman(std::span<const double> y_true, std::span<const double> y_pred,
                                std::span<const double> bmi, BmiCategory c) {
    if (y_true.size() != y_pred.size() || y_true.size() != bmi.size())
        throw LengthMismatch("stratification inputs differ in length");
    std::vector<double> t, p;
    for (std::size_t i = 0; i < bmi.size(); ++i)
        if (in_category(c, bmi[i])) {
            t.push_back(y_true[i]);
            p.push_back(y_pred[i]);
        }
    if (t.size() < 3) throw CategoryTooSmall("category '" + to_string(c) + "' has fewer than 3 members");
    return spearman(t, p);
}

struct CategoryResult {
    BmiCategory category = BmiCategory::all;
    std::size_t n = 0;
    std::optional<double> spearman;  // absent when too small or constant
};

inline std::vector<CategoryResult> stratified_eval(std::span<const double> y_true, std::span<const double> y_pred,
                                                   std::span<const double> bmi) {
    std::vector<CategoryResult> out;
    for (auto c : {BmiCategory::all, BmiCategory::normal, BmiCategory::overweight_or_obese, BmiCategory::overweight,
                   BmiCategory::obese}) {
        CategoryResult r;
        r.category = c;
        r.n = static_cast<std::size_t>(std::count_if(bmi.begin(), bmi.end(), [&](double b) { return in_category(c, b); }));
        try {
            r.spearman = category_spearman(y_true, y_pred, bmi, c);
        } catch (const CategoryTooSmall&) {
        } catch (const ConstantInput&) {
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace wristvat
