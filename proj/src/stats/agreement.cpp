#include <vframe/stats.hpp>

#include <vframe/core/error.hpp>
#include <vframe/core/log.hpp>

#include <map>

namespace vframe::stats {

double krippendorff_alpha_nominal(const Eigen::MatrixXd& ratings)
{
    if (ratings.rows() < 2) {
        throw DataError("Krippendorff's alpha needs at least two coders");
    }
    // Coincidence matrix over the distinct values, built unit by unit.
    std::map<double, std::size_t> value_index;
    for (Eigen::Index i = 0; i < ratings.size(); ++i) {
        const double v = ratings.data()[i];
        if (!std::isnan(v)) {
            value_index.emplace(v, 0);
        }
    }
    std::size_t next = 0;
    for (auto& [v, idx] : value_index) {
        idx = next++;
    }
    const auto values = static_cast<Eigen::Index>(value_index.size());
    Eigen::MatrixXd coincidence = Eigen::MatrixXd::Zero(values, values);

    bool pairable = false;
    Eigen::VectorXd unit_counts(values);
    for (Eigen::Index item = 0; item < ratings.cols(); ++item) {
        unit_counts.setZero();
        double m_u = 0.0;
        for (Eigen::Index coder = 0; coder < ratings.rows(); ++coder) {
            const double v = ratings(coder, item);
            if (!std::isnan(v)) {
                unit_counts(static_cast<Eigen::Index>(value_index.at(v))) += 1.0;
                m_u += 1.0;
            }
        }
        if (m_u < 2.0) {
            continue;
        }
        pairable = true;
        Eigen::MatrixXd pairs = unit_counts * unit_counts.transpose();
        pairs.diagonal() -= unit_counts;
        coincidence += pairs / (m_u - 1.0);
    }
    if (!pairable) {
        throw DataError("Krippendorff's alpha needs at least one item rated by two coders");
    }

    const Eigen::VectorXd marginals = coincidence.rowwise().sum();
    const double n = marginals.sum();
    const double observed = coincidence.sum() - coincidence.trace();
    const double expected = marginals.sum() * marginals.sum() - marginals.squaredNorm();
    if (expected == 0.0) {
        log().warn("Krippendorff's alpha: all ratings share one value; reporting alpha = 1");
        return 1.0;
    }
    return 1.0 - (n - 1.0) * observed / expected;
}

} // namespace vframe::stats
