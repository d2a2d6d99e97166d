#include "subforest/model.hpp"

#include <algorithm>
#include <numeric>

namespace subforest {

namespace {

void check_sizes(const Vector& a, const Vector& b, const char* what)
{
    if (a.size() != b.size()) throw ValidationError(std::string(what) + ": length mismatch");
    if (a.size() == 0) throw ValidationError(std::string(what) + ": empty input");
}

} // namespace

double mse(const Vector& y, const Vector& prediction)
{
    check_sizes(y, prediction, "mse");
    return (y - prediction).squaredNorm() / static_cast<double>(y.size());
}

double r2_score(const Vector& y, const Vector& prediction)
{
    check_sizes(y, prediction, "r2");
    const double ss_tot = (y.array() - y.mean()).square().sum();
    const double ss_res = (y - prediction).squaredNorm();
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

double accuracy(const Vector& y, const Vector& predicted_class)
{
    check_sizes(y, predicted_class, "accuracy");
    return (y.array() == predicted_class.array()).cast<double>().mean();
}

double roc_auc(const Vector& y, const Vector& score)
{
    check_sizes(y, score, "auc");
    const auto n = static_cast<std::size_t>(y.size());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return score[static_cast<Eigen::Index>(a)] < score[static_cast<Eigen::Index>(b)];
    });
    double rank_sum = 0.0;
    double n_pos = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && score[static_cast<Eigen::Index>(idx[j])] == score[static_cast<Eigen::Index>(idx[i])]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j + 1);
        for (std::size_t k = i; k < j; ++k) {
            if (y[static_cast<Eigen::Index>(idx[k])] > 0.0) {
                rank_sum += mid;
                n_pos += 1.0;
            }
        }
        i = j;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) throw ValidationError("auc: both classes must be present");
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

} // namespace subforest
