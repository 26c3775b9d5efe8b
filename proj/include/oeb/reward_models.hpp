#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oeb/core.hpp"
#include "oeb/rng.hpp"

namespace oeb {

// Revealed (features, reward, weight) rows in row-major order. When
// `weighted` is set, models use the weights as per-sample fit weights;
// otherwise every row counts once.
class TrainingSet {
public:
    TrainingSet() = default;
    explicit TrainingSet(std::size_t num_features, bool weighted = false)
        : num_features_(num_features), weighted_(weighted) {}

    void add(std::span<const double> features, double reward, double weight = 1.0);

    std::size_t size() const noexcept { return y_.size(); }
    bool empty() const noexcept { return y_.empty(); }
    std::size_t num_features() const noexcept { return num_features_; }
    bool weighted() const noexcept { return weighted_; }
    void set_weighted(bool w) noexcept { weighted_ = w; }

    std::span<const double> row(std::size_t i) const { return {x_.data() + i * num_features_, num_features_}; }
    double x(std::size_t i, std::size_t f) const { return x_[i * num_features_ + f]; }
    double y(std::size_t i) const { return y_[i]; }
    double raw_weight(std::size_t i) const { return w_[i]; }
    // Weight the fit actually uses for row i.
    double fit_weight(std::size_t i) const { return weighted_ ? w_[i] : 1.0; }

    const std::vector<double>& targets() const noexcept { return y_; }
    void set_targets(std::vector<double> y);

    // Throws ErrorCategory::model on empty data or non-finite values.
    void validate() const;

private:
    std::size_t num_features_ = 0;
    bool weighted_ = false;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> w_;
};

// ---------------------------------------------------------------------------
// Random forest regression

struct ForestParams {
    int num_trees = 100;
    int max_depth = 12;
    int min_samples_leaf = 5;
    double features_per_split = 1.0 / 3.0;
    bool bootstrap = true;
    // Candidate thresholds per feature; features with fewer distinct values
    // are split exactly between every pair of neighbours.
    int max_bins = 255;
};

// Axis-aligned binary tree; x[feature] <= threshold goes left.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    RegressionTree() = default;
    explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    double predict(std::span<const double> x) const;
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    int depth() const;

private:
    std::vector<Node> nodes_;
};

struct ForestPrediction {
    double mean = 0.0;
    double dispersion = 0.0;  // population variance of tree outputs
};

class ForestModel {
public:
    ForestModel() = default;
    ForestModel(std::vector<RegressionTree> trees, ForestParams params, std::size_t num_features)
        : trees_(std::move(trees)), params_(params), num_features_(num_features) {}

    bool fitted() const noexcept { return !trees_.empty(); }
    std::size_t num_trees() const noexcept { return trees_.size(); }
    std::size_t num_features() const noexcept { return num_features_; }
    const ForestParams& params() const noexcept { return params_; }
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

    double predict_mean(std::span<const double> x) const;
    ForestPrediction predict_with_dispersion(std::span<const double> x) const;
    std::vector<double> tree_outputs(std::span<const double> x) const;

    double predict(std::span<const double> x) const { return predict_mean(x); }

private:
    void check_input(std::span<const double> x) const;

    std::vector<RegressionTree> trees_;
    ForestParams params_;
    std::size_t num_features_ = 0;
};

ForestModel fit_forest(const TrainingSet& data, const ForestParams& params, const RngStream& rng);

// ---------------------------------------------------------------------------
// Ridge regression: minimizes sum w_i (y_i - b.x_i - c)^2 + lambda |b|^2,
// intercept unpenalized.

class RidgeModel {
public:
    RidgeModel() = default;
    RidgeModel(Eigen::VectorXd coefficients, double intercept, double lambda)
        : coef_(std::move(coefficients)), intercept_(intercept), lambda_(lambda), fitted_(true) {}

    bool fitted() const noexcept { return fitted_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coef_; }
    double intercept() const noexcept { return intercept_; }
    double lambda() const noexcept { return lambda_; }

    double predict(std::span<const double> x) const;

private:
    Eigen::VectorXd coef_;
    double intercept_ = 0.0;
    double lambda_ = 0.0;
    bool fitted_ = false;
};

RidgeModel fit_ridge(const TrainingSet& data, double lambda);

// ---------------------------------------------------------------------------
// Two-class LDA on the "reward >= cutoff" label.

class LdaModel {
public:
    LdaModel() = default;
    LdaModel(Eigen::VectorXd mean_negative, Eigen::VectorXd mean_positive, Eigen::MatrixXd covariance,
             double prior_positive, double cutoff);

    bool fitted() const noexcept { return fitted_; }
    const Eigen::VectorXd& mean_negative() const noexcept { return mu0_; }
    const Eigen::VectorXd& mean_positive() const noexcept { return mu1_; }
    const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
    // Discriminant direction: inverse covariance times the mean difference.
    const Eigen::VectorXd& direction() const noexcept { return direction_; }
    double prior_positive() const noexcept { return prior1_; }
    double cutoff() const noexcept { return cutoff_; }

    // Log posterior odds of the positive (reward >= cutoff) class.
    double score(std::span<const double> x) const;

private:
    Eigen::VectorXd mu0_, mu1_;
    Eigen::MatrixXd cov_;
    Eigen::VectorXd direction_;
    double bias_ = 0.0;
    double prior1_ = 0.5;
    double cutoff_ = kDefaultNoChangeCutoff;
    bool fitted_ = false;
};

LdaModel fit_lda(const TrainingSet& data, double cutoff = kDefaultNoChangeCutoff, double shrinkage = 0.1);

inline double lda_score(const LdaModel& model, std::span<const double> x) { return model.score(x); }

}  // namespace oeb
