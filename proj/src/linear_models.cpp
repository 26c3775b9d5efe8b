#include <cmath>
#include <string>

#include "oeb/error.hpp"
#include "oeb/reward_models.hpp"

namespace oeb {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

double RidgeModel::predict(std::span<const double> x) const {
    require(fitted_, ErrorCategory::model, "ridge model is not fitted");
    require(static_cast<Eigen::Index>(x.size()) == coef_.size(), ErrorCategory::model,
            "feature vector length does not match ridge model");
    return intercept_ + coef_.dot(as_vector(x));
}

// Solved on weighted-centred data so the intercept stays unpenalized:
// (Xc' W Xc + lambda I) b = Xc' W yc, c = ybar - xbar.b
RidgeModel fit_ridge(const TrainingSet& data, double lambda) {
    data.validate();
    require(lambda >= 0.0, ErrorCategory::config, "ridge lambda must be non-negative");
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index nf = static_cast<Eigen::Index>(data.num_features());

    Eigen::VectorXd w(n);
    Eigen::MatrixXd x(n, nf);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w(i) = data.fit_weight(static_cast<std::size_t>(i));
        y(i) = data.y(static_cast<std::size_t>(i));
        for (Eigen::Index f = 0; f < nf; ++f) x(i, f) = data.x(static_cast<std::size_t>(i), static_cast<std::size_t>(f));
    }
    const double sw = w.sum();
    const Eigen::RowVectorXd xbar = (w.transpose() * x) / sw;
    const double ybar = w.dot(y) / sw;
    x.rowwise() -= xbar;
    y.array() -= ybar;

    const Eigen::MatrixXd xw = x.array().colwise() * w.array();
    Eigen::MatrixXd gram = xw.transpose() * x;
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = xw.transpose() * y;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
    require(ldlt.info() == Eigen::Success && (nf == 0 || d.minCoeff() > 1e-12 * scale), ErrorCategory::model,
            "ridge normal equations are singular (collinear features with lambda = " + std::to_string(lambda) + ")");
    Eigen::VectorXd beta = ldlt.solve(rhs);
    require(beta.allFinite(), ErrorCategory::model, "ridge solution is not finite");
    const double intercept = ybar - xbar.dot(beta);
    return RidgeModel(std::move(beta), intercept, lambda);
}

LdaModel::LdaModel(Eigen::VectorXd mean_negative, Eigen::VectorXd mean_positive, Eigen::MatrixXd covariance,
                   double prior_positive, double cutoff)
    : mu0_(std::move(mean_negative)),
      mu1_(std::move(mean_positive)),
      cov_(std::move(covariance)),
      prior1_(prior_positive),
      cutoff_(cutoff),
      fitted_(true) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_);
    require(ldlt.info() == Eigen::Success && ldlt.isPositive(), ErrorCategory::model,
            "LDA covariance is not positive definite");
    direction_ = ldlt.solve(mu1_ - mu0_);
    bias_ = -0.5 * direction_.dot(mu0_ + mu1_) + std::log(prior1_ / (1.0 - prior1_));
}

double LdaModel::score(std::span<const double> x) const {
    require(fitted_, ErrorCategory::model, "LDA model is not fitted");
    require(static_cast<Eigen::Index>(x.size()) == direction_.size(), ErrorCategory::model,
            "feature vector length does not match LDA model");
    return direction_.dot(as_vector(x)) + bias_;
}

LdaModel fit_lda(const TrainingSet& data, double cutoff, double shrinkage) {
    data.validate();
    require(shrinkage >= 0.0 && shrinkage <= 1.0, ErrorCategory::config, "LDA shrinkage must be in [0, 1]");
    const Eigen::Index nf = static_cast<Eigen::Index>(data.num_features());

    Eigen::VectorXd sum[2] = {Eigen::VectorXd::Zero(nf), Eigen::VectorXd::Zero(nf)};
    double wsum[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int cls = data.y(i) >= cutoff ? 1 : 0;
        const double w = data.fit_weight(i);
        sum[cls] += w * as_vector(data.row(i));
        wsum[cls] += w;
    }
    require(wsum[0] > 0.0 && wsum[1] > 0.0, ErrorCategory::model,
            "LDA needs both classes; all training rewards fall on one side of the cutoff");
    const Eigen::VectorXd mu[2] = {sum[0] / wsum[0], sum[1] / wsum[1]};

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(nf, nf);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int cls = data.y(i) >= cutoff ? 1 : 0;
        const Eigen::VectorXd d = as_vector(data.row(i)) - mu[cls];
        cov.noalias() += data.fit_weight(i) * d * d.transpose();
    }
    cov /= (wsum[0] + wsum[1]);

    Eigen::MatrixXd shrunk = (1.0 - shrinkage) * cov;
    shrunk.diagonal() += shrinkage * cov.diagonal();
    // Constant features carry no signal; a unit variance keeps the system solvable.
    for (Eigen::Index f = 0; f < nf; ++f)
        if (!(cov(f, f) > 1e-12 * std::max(1.0, cov.diagonal().maxCoeff()))) {
            shrunk.row(f).setZero();
            shrunk.col(f).setZero();
            shrunk(f, f) = 1.0;
        }

    const double prior1 = wsum[1] / (wsum[0] + wsum[1]);
    return LdaModel(mu[0], mu[1], std::move(shrunk), prior1, cutoff);
}

}  // namespace oeb
