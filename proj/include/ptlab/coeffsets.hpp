#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ptlab {

enum class CoeffTag { BOX01, NONNEG, REAL, COMPLEX };

/// Ground set X for each coefficient. Complex coefficients are stored as
/// consecutive (re, im) pairs so every numeric kernel stays real.
class CoefficientSet {
 public:
  constexpr CoefficientSet() = default;
  constexpr explicit CoefficientSet(CoeffTag tag) : tag_(tag) {}

  constexpr CoeffTag tag() const { return tag_; }
  constexpr int ambient_dim() const { return tag_ == CoeffTag::COMPLEX ? 2 : 1; }
  constexpr bool is_complex() const { return tag_ == CoeffTag::COMPLEX; }

  /// True when `v` (one coefficient, ambient_dim reals) lies in X.
  bool contains(const double* v) const;

  /// True when the coefficient is not pinned to the boundary of X.
  bool is_free(const double* v) const;

  std::string name() const;
  static CoefficientSet parse(std::string_view text);

  friend constexpr bool operator==(CoefficientSet a, CoefficientSet b) { return a.tag_ == b.tag_; }

 private:
  CoeffTag tag_ = CoeffTag::REAL;
};

inline constexpr CoefficientSet kBox01{CoeffTag::BOX01};
inline constexpr CoefficientSet kNonneg{CoeffTag::NONNEG};
inline constexpr CoefficientSet kReal{CoeffTag::REAL};
inline constexpr CoefficientSet kComplex{CoeffTag::COMPLEX};

/// A length M*B vector of coefficients in X, partitioned into B blocks of M.
class SignalVector {
 public:
  SignalVector(Eigen::VectorXd entries, CoefficientSet set, int block_size, int num_blocks);

  static SignalVector zeros(CoefficientSet set, int block_size, int num_blocks);

  const Eigen::VectorXd& entries() const { return entries_; }
  CoefficientSet coeff_set() const { return set_; }
  int block_size() const { return block_size_; }
  int num_blocks() const { return num_blocks_; }
  /// Number of coefficients (M*B), not the number of reals.
  int size() const { return block_size_ * num_blocks_; }

  /// Reals belonging to block b.
  Eigen::VectorXd block(int b) const;

 private:
  Eigen::VectorXd entries_;
  CoefficientSet set_;
  int block_size_;
  int num_blocks_;
};

/// Mixed l_{2,1} norm over coefficient groups: sum |x_i| for real sets,
/// sum of pair norms for COMPLEX.
double norm_l1x(const Eigen::Ref<const Eigen::VectorXd>& reals, CoefficientSet set);
double norm_l1x(const SignalVector& x);

/// argmin_z t*||z||_{1,X} + 0.5*||z - x||^2 subject to z in X^N. The input
/// is an arbitrary real vector (it need not lie in X); the output always does.
Eigen::VectorXd prox_step(const Eigen::Ref<const Eigen::VectorXd>& reals, double t, CoefficientSet set);

/// Per block, the number of coefficients off the boundary of X. Exact test:
/// only meaningful for generated signals, never for solver output.
std::vector<int> count_free(const SignalVector& x);

}  // namespace ptlab
