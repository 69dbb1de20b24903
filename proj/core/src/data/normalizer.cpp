#include "pry/data/normalizer.hpp"

namespace pry::data {
namespace {
constexpr double kDegenerate = 1e-12;
}

Normalizer::Normalizer(Eigen::VectorXd min, Eigen::VectorXd max)
    : min_(std::move(min)), max_(std::move(max)) {
  require(min_.size() == max_.size(), "Normalizer: min/max size mismatch");
  for (int i = 0; i < min_.size(); ++i)
    require(min_(i) <= max_(i), "Normalizer: min > max at dim " +
                                    std::to_string(i));
}

Normalizer Normalizer::fit(const std::vector<Eigen::VectorXd>& rows) {
  require(!rows.empty(), "Normalizer::fit: no data");
  Eigen::VectorXd mn = rows.front();
  Eigen::VectorXd mx = rows.front();
  for (const Eigen::VectorXd& r : rows) {
    require(r.size() == mn.size(), "Normalizer::fit: ragged rows");
    mn = mn.cwiseMin(r);
    mx = mx.cwiseMax(r);
  }
  return Normalizer(std::move(mn), std::move(mx));
}

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& v) const {
  require(v.size() == min_.size(), "Normalizer: dim mismatch");
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double range = max_(i) - min_(i);
    out(i) = range < kDegenerate
                 ? 0.0
                 : 2.0 * (v(i) - min_(i)) / range - 1.0;
  }
  return out;
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& v) const {
  require(v.size() == min_.size(), "Normalizer: dim mismatch");
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double range = max_(i) - min_(i);
    out(i) = range < kDegenerate ? min_(i)
                                 : min_(i) + 0.5 * (v(i) + 1.0) * range;
  }
  return out;
}

}  // namespace pry::data
