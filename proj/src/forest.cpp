#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oeb/error.hpp"
#include "oeb/reward_models.hpp"

namespace oeb {

void TrainingSet::add(std::span<const double> features, double reward, double weight) {
    require(features.size() == num_features_, ErrorCategory::model,
            "training row has " + std::to_string(features.size()) + " features, expected " +
                std::to_string(num_features_));
    x_.insert(x_.end(), features.begin(), features.end());
    y_.push_back(reward);
    w_.push_back(weight);
}

void TrainingSet::set_targets(std::vector<double> y) {
    require(y.size() == y_.size(), ErrorCategory::internal, "replacement targets differ in length");
    y_ = std::move(y);
}

void TrainingSet::validate() const {
    require(!y_.empty(), ErrorCategory::model, "empty training set");
    for (double v : x_) require(std::isfinite(v), ErrorCategory::model, "non-finite feature value in training set");
    for (double v : y_) require(std::isfinite(v), ErrorCategory::model, "non-finite target in training set");
    for (double v : w_) require(std::isfinite(v) && v > 0.0, ErrorCategory::model, "non-positive training weight");
}

double RegressionTree::predict(std::span<const double> x) const {
    int n = 0;
    while (nodes_[n].feature >= 0) {
        const Node& node = nodes_[n];
        n = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[n].value;
}

int RegressionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        if (node.feature < 0) continue;
        d[node.left] = d[node.right] = d[i] + 1;
        best = std::max(best, d[i] + 1);
    }
    return best;
}

namespace {

// Per-feature candidate thresholds and the resulting bin code of every
// training row. code(x) = number of thresholds strictly below x, so a split
// after bin b sends exactly the rows with x <= thresholds[b] left.
struct BinnedFeatures {
    std::size_t rows = 0;
    std::vector<std::vector<double>> thresholds;
    std::vector<std::uint8_t> codes;  // feature-major: codes[f * rows + i]

    std::uint8_t code(std::size_t f, std::size_t i) const { return codes[f * rows + i]; }
};

BinnedFeatures bin_features(const TrainingSet& data, int max_bins) {
    const std::size_t n = data.size(), nf = data.num_features();
    BinnedFeatures out;
    out.rows = n;
    out.thresholds.resize(nf);
    out.codes.resize(n * nf);

    std::vector<double> sorted(n);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t i = 0; i < n; ++i) sorted[i] = data.x(i, f);
        std::sort(sorted.begin(), sorted.end());

        std::vector<double> uniq;
        std::vector<std::size_t> counts;
        for (double v : sorted) {
            if (uniq.empty() || v != uniq.back()) {
                uniq.push_back(v);
                counts.push_back(0);
            }
            ++counts.back();
        }

        auto& thr = out.thresholds[f];
        const std::size_t bins = static_cast<std::size_t>(std::max(2, max_bins));
        if (uniq.size() <= bins) {
            for (std::size_t j = 0; j + 1 < uniq.size(); ++j) thr.push_back(0.5 * (uniq[j] + uniq[j + 1]));
        } else {
            // Equal-frequency cuts placed between distinct values.
            std::size_t cum = 0, next_bin = 1;
            for (std::size_t j = 0; j + 1 < uniq.size() && next_bin < bins; ++j) {
                cum += counts[j];
                if (cum * bins >= next_bin * n) {
                    thr.push_back(0.5 * (uniq[j] + uniq[j + 1]));
                    while (next_bin < bins && cum * bins >= next_bin * n) ++next_bin;
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double v = data.x(i, f);
            out.codes[f * n + i] =
                static_cast<std::uint8_t>(std::lower_bound(thr.begin(), thr.end(), v) - thr.begin());
        }
    }
    return out;
}

struct SampleRow {
    std::uint32_t row;
    std::uint32_t count;  // bootstrap multiplicity
    double weight;        // count * fit weight
};

struct SplitChoice {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const TrainingSet& data, const BinnedFeatures& bins, const ForestParams& params)
        : data_(data), bins_(bins), params_(params) {
        const std::size_t nf = data.num_features();
        mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(nf) * params.features_per_split + 1e-9));
        mtry_ = std::min(mtry_, nf);
        hist_w_.assign(256, 0.0);
        hist_s_.assign(256, 0.0);
        hist_c_.assign(256, 0);
    }

    RegressionTree build(RngStream rng) {
        const std::size_t n = data_.size();
        std::vector<std::uint32_t> counts(n, 0);
        if (params_.bootstrap) {
            for (std::size_t k = 0; k < n; ++k) ++counts[rng.index(n)];
        } else {
            std::fill(counts.begin(), counts.end(), 1u);
        }
        rows_.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (counts[i] > 0)
                rows_.push_back({static_cast<std::uint32_t>(i), counts[i], counts[i] * data_.fit_weight(i)});

        features_.resize(data_.num_features());
        nodes_.clear();
        nodes_.emplace_back();
        struct Task {
            int node;
            std::size_t begin, end;
            int depth;
        };
        std::vector<Task> stack{{0, 0, rows_.size(), 0}};
        while (!stack.empty()) {
            Task t = stack.back();
            stack.pop_back();

            double w = 0.0, s = 0.0;
            std::size_t c = 0;
            double ymin = data_.y(rows_[t.begin].row), ymax = ymin;
            for (std::size_t k = t.begin; k < t.end; ++k) {
                const SampleRow& r = rows_[k];
                const double y = data_.y(r.row);
                w += r.weight;
                s += r.weight * y;
                c += r.count;
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
            nodes_[t.node].value = s / w;
            if (t.depth >= params_.max_depth || ymin == ymax ||
                c < 2 * static_cast<std::size_t>(std::max(1, params_.min_samples_leaf)))
                continue;

            const SplitChoice split = best_split(t.begin, t.end, w, s, rng);
            if (split.feature < 0) continue;

            const auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                            rows_.begin() + static_cast<std::ptrdiff_t>(t.end),
                                            [&](const SampleRow& r) {
                                                return bins_.code(split.feature, r.row) <= split.bin;
                                            });
            const std::size_t m = static_cast<std::size_t>(mid - rows_.begin());
            const int left = static_cast<int>(nodes_.size());
            nodes_.emplace_back();
            nodes_.emplace_back();
            RegressionTree::Node& node = nodes_[t.node];
            node.feature = split.feature;
            node.threshold = bins_.thresholds[split.feature][split.bin];
            node.left = left;
            node.right = left + 1;
            // Right pushed first so the left subtree is numbered first.
            stack.push_back({left + 1, m, t.end, t.depth + 1});
            stack.push_back({left, t.begin, m, t.depth + 1});
        }
        return RegressionTree(std::move(nodes_));
    }

private:
    void choose_features(RngStream& rng) {
        std::iota(features_.begin(), features_.end(), 0);
        for (std::size_t k = 0; k < mtry_; ++k) std::swap(features_[k], features_[k + rng.index(features_.size() - k)]);
        std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
    }

    // Weighted variance reduction, written as the increase of sum S^2/W.
    // Candidates are scanned by ascending feature then ascending bin, and
    // only a strictly larger gain replaces the incumbent.
    SplitChoice best_split(std::size_t begin, std::size_t end, double w, double s, RngStream& rng) {
        choose_features(rng);
        const double parent = s * s / w;
        const double min_gain = 1e-12 * std::max(1.0, std::abs(parent));
        const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
        SplitChoice best;
        best.gain = min_gain;

        auto consider = [&](int f, int bin, double wl, double sl, std::size_t cl, std::size_t ctot) {
            const std::size_t cr = ctot - cl;
            const double wr = w - wl, sr = s - sl;
            if (cl < min_leaf || cr < min_leaf || wl <= 0.0 || wr <= 0.0) return;
            const double gain = sl * sl / wl + sr * sr / wr - parent;
            if (gain > best.gain) best = {f, bin, gain};
        };

        const std::size_t n_node = end - begin;
        for (std::size_t k = 0; k < mtry_; ++k) {
            const int f = static_cast<int>(features_[k]);
            std::size_t ctot = 0;
            if (n_node < 64) {
                small_.clear();
                for (std::size_t i = begin; i < end; ++i) {
                    const SampleRow& r = rows_[i];
                    small_.push_back({bins_.code(f, r.row), r.weight, r.weight * data_.y(r.row), r.count});
                    ctot += r.count;
                }
                std::sort(small_.begin(), small_.end(),
                          [](const SmallEntry& a, const SmallEntry& b) { return a.code < b.code; });
                double wl = 0.0, sl = 0.0;
                std::size_t cl = 0;
                for (std::size_t i = 0; i + 1 < small_.size(); ++i) {
                    wl += small_[i].w;
                    sl += small_[i].s;
                    cl += small_[i].c;
                    if (small_[i].code != small_[i + 1].code) consider(f, small_[i].code, wl, sl, cl, ctot);
                }
            } else {
                int lo = 255, hi = 0;
                for (std::size_t i = begin; i < end; ++i) {
                    const SampleRow& r = rows_[i];
                    const int code = bins_.code(f, r.row);
                    hist_w_[code] += r.weight;
                    hist_s_[code] += r.weight * data_.y(r.row);
                    hist_c_[code] += r.count;
                    ctot += r.count;
                    lo = std::min(lo, code);
                    hi = std::max(hi, code);
                }
                double wl = 0.0, sl = 0.0;
                std::size_t cl = 0;
                for (int b = lo; b < hi; ++b) {
                    if (hist_c_[b] == 0) continue;
                    wl += hist_w_[b];
                    sl += hist_s_[b];
                    cl += hist_c_[b];
                    consider(f, b, wl, sl, cl, ctot);
                }
                for (int b = lo; b <= hi; ++b) {
                    hist_w_[b] = 0.0;
                    hist_s_[b] = 0.0;
                    hist_c_[b] = 0;
                }
            }
        }
        return best;
    }

    struct SmallEntry {
        int code;
        double w, s;
        std::size_t c;
    };

    const TrainingSet& data_;
    const BinnedFeatures& bins_;
    const ForestParams& params_;
    std::size_t mtry_ = 1;
    std::vector<SampleRow> rows_;
    std::vector<std::size_t> features_;
    std::vector<RegressionTree::Node> nodes_;
    std::vector<double> hist_w_, hist_s_;
    std::vector<std::size_t> hist_c_;
    std::vector<SmallEntry> small_;
};

}  // namespace

ForestModel fit_forest(const TrainingSet& data, const ForestParams& params, const RngStream& rng) {
    data.validate();
    require(params.num_trees >= 1, ErrorCategory::config, "forest needs at least one tree");
    require(params.max_depth >= 0, ErrorCategory::config, "forest max_depth must be non-negative");
    require(params.features_per_split > 0.0 && params.features_per_split <= 1.0, ErrorCategory::config,
            "features_per_split must be in (0, 1]");
    require(params.max_bins >= 2 && params.max_bins <= 256, ErrorCategory::config, "max_bins must be in [2, 256]");

    const BinnedFeatures bins = bin_features(data, params.max_bins);
    TreeBuilder builder(data, bins, params);
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(params.num_trees));
    for (int b = 0; b < params.num_trees; ++b) trees.push_back(builder.build(rng.derive(static_cast<std::uint64_t>(b))));
    return ForestModel(std::move(trees), params, data.num_features());
}

void ForestModel::check_input(std::span<const double> x) const {
    require(fitted(), ErrorCategory::model, "forest model is not fitted");
    require(x.size() == num_features_, ErrorCategory::model,
            "feature vector has length " + std::to_string(x.size()) + ", model expects " + std::to_string(num_features_));
}

std::vector<double> ForestModel::tree_outputs(std::span<const double> x) const {
    check_input(x);
    std::vector<double> out;
    out.reserve(trees_.size());
    for (const RegressionTree& t : trees_) out.push_back(t.predict(x));
    return out;
}

double ForestModel::predict_mean(std::span<const double> x) const { return predict_with_dispersion(x).mean; }

ForestPrediction ForestModel::predict_with_dispersion(std::span<const double> x) const {
    check_input(x);
    double sum = 0.0;
    for (const RegressionTree& t : trees_) sum += t.predict(x);
    const double b = static_cast<double>(trees_.size());
    const double mean = sum / b;
    if (trees_.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (const RegressionTree& t : trees_) {
        const double d = t.predict(x) - mean;
        ss += d * d;
    }
    return {mean, ss / b};
}

}  // namespace oeb
