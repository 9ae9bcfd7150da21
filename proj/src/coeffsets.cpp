#include "ptlab/coeffsets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace ptlab {

bool CoefficientSet::contains(const double* v) const {
  switch (tag_) {
    case CoeffTag::BOX01:
      return v[0] >= 0.0 && v[0] <= 1.0;
    case CoeffTag::NONNEG:
      return v[0] >= 0.0;
    case CoeffTag::REAL:
      return std::isfinite(v[0]);
    case CoeffTag::COMPLEX:
      return std::isfinite(v[0]) && std::isfinite(v[1]);
  }
  return false;
}

bool CoefficientSet::is_free(const double* v) const {
  switch (tag_) {
    case CoeffTag::BOX01:
      return v[0] != 0.0 && v[0] != 1.0;
    case CoeffTag::NONNEG:
    case CoeffTag::REAL:
      return v[0] != 0.0;
    case CoeffTag::COMPLEX:
      return v[0] != 0.0 || v[1] != 0.0;
  }
  return false;
}

std::string CoefficientSet::name() const {
  switch (tag_) {
    case CoeffTag::BOX01:
      return "box01";
    case CoeffTag::NONNEG:
      return "nonneg";
    case CoeffTag::REAL:
      return "real";
    case CoeffTag::COMPLEX:
      return "complex";
  }
  return "?";
}

CoefficientSet CoefficientSet::parse(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "box01" || t == "[0,1]" || t == "box") return kBox01;
  if (t == "nonneg" || t == "r+" || t == "positive") return kNonneg;
  if (t == "real" || t == "r") return kReal;
  if (t == "complex" || t == "c") return kComplex;
  throw std::invalid_argument("unknown coefficient set '" + std::string(text) +
                              "' (expected box01, nonneg, real or complex)");
}

SignalVector::SignalVector(Eigen::VectorXd entries, CoefficientSet set, int block_size, int num_blocks)
    : entries_(std::move(entries)), set_(set), block_size_(block_size), num_blocks_(num_blocks) {
  if (block_size < 1 || num_blocks < 1) throw std::invalid_argument("SignalVector: empty shape");
  const int k = set.ambient_dim();
  if (entries_.size() != static_cast<Eigen::Index>(k) * block_size * num_blocks)
    throw std::invalid_argument("SignalVector: length does not match M*B*ambient_dim");
  for (Eigen::Index i = 0; i < entries_.size(); i += k) {
    if (!set.contains(entries_.data() + i))
      throw std::invalid_argument("SignalVector: entry outside coefficient set " + set.name());
  }
}

SignalVector SignalVector::zeros(CoefficientSet set, int block_size, int num_blocks) {
  return SignalVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set.ambient_dim()) * block_size * num_blocks),
                      set, block_size, num_blocks);
}

Eigen::VectorXd SignalVector::block(int b) const {
  const Eigen::Index len = static_cast<Eigen::Index>(set_.ambient_dim()) * block_size_;
  return entries_.segment(b * len, len);
}

double norm_l1x(const Eigen::Ref<const Eigen::VectorXd>& reals, CoefficientSet set) {
  if (!set.is_complex()) return reals.lpNorm<1>();
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < reals.size(); i += 2) total += std::hypot(reals[i], reals[i + 1]);
  return total;
}

double norm_l1x(const SignalVector& x) { return norm_l1x(x.entries(), x.coeff_set()); }

Eigen::VectorXd prox_step(const Eigen::Ref<const Eigen::VectorXd>& reals, double t, CoefficientSet set) {
  if (!(t > 0.0)) throw std::invalid_argument("prox_step: t must be positive");
  Eigen::VectorXd z(reals.size());
  switch (set.tag()) {
    case CoeffTag::REAL:
      for (Eigen::Index i = 0; i < reals.size(); ++i) {
        const double a = std::abs(reals[i]) - t;
        z[i] = a > 0.0 ? std::copysign(a, reals[i]) : 0.0;
      }
      break;
    case CoeffTag::NONNEG:
      for (Eigen::Index i = 0; i < reals.size(); ++i) z[i] = std::max(reals[i] - t, 0.0);
      break;
    case CoeffTag::BOX01:
      for (Eigen::Index i = 0; i < reals.size(); ++i) z[i] = std::clamp(reals[i] - t, 0.0, 1.0);
      break;
    case CoeffTag::COMPLEX:
      for (Eigen::Index i = 0; i + 1 < reals.size(); i += 2) {
        const double r = std::hypot(reals[i], reals[i + 1]);
        const double scale = r > t ? 1.0 - t / r : 0.0;
        z[i] = scale * reals[i];
        z[i + 1] = scale * reals[i + 1];
      }
      break;
  }
  return z;
}

std::vector<int> count_free(const SignalVector& x) {
  const int k = x.coeff_set().ambient_dim();
  std::vector<int> counts(x.num_blocks(), 0);
  const double* data = x.entries().data();
  for (int b = 0; b < x.num_blocks(); ++b) {
    for (int j = 0; j < x.block_size(); ++j) {
      const Eigen::Index i = (static_cast<Eigen::Index>(b) * x.block_size() + j) * k;
      if (x.coeff_set().is_free(data + i)) ++counts[b];
    }
  }
  return counts;
}

}  // namespace ptlab
