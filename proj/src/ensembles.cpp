#include "ptlab/ensembles.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace ptlab {
namespace {

using cd = std::complex<double>;

cd unit_phase(double cycles) {
  const double a = 2.0 * std::numbers::pi * cycles;
  return {std::cos(a), std::sin(a)};
}

// exp(2 pi i k t / M), reducing k*t mod M first so large products keep full accuracy.
cd dft_phase(long k, long t, long M) { return unit_phase(static_cast<double>((k * t) % M) / M); }

}  // namespace

void ProblemSizes::validate() const {
  if (M < 1) throw std::invalid_argument("ProblemSizes: M must be >= 1");
  if (m < 1 || m > M) throw std::invalid_argument("ProblemSizes: need 1 <= m <= M");
  if (ell < 0 || ell > M) throw std::invalid_argument("ProblemSizes: need 0 <= ell <= M");
  if (B < 1) throw std::invalid_argument("ProblemSizes: B must be >= 1");
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::DENSE:
      return "dense";
    case OperatorKind::BLOCK_DIAG_REPEATED:
      return "block_diag_repeated";
    case OperatorKind::BLOCK_DIAG_DISTINCT:
      return "block_diag_distinct";
    case OperatorKind::ANISO_2D:
      return "aniso_2d";
    case OperatorKind::ISO_2D:
      return "iso_2d";
  }
  return "?";
}

void validate_index_set(const std::vector<int>& K, int M, const char* what) {
  std::vector<bool> seen(static_cast<std::size_t>(std::max(M, 0)), false);
  for (int k : K) {
    if (k < 0 || k >= M) throw std::invalid_argument(std::string(what) + ": index out of range");
    if (seen[k]) throw std::invalid_argument(std::string(what) + ": duplicate index");
    seen[k] = true;
  }
}

// ---------------------------------------------------------------------------
// Real-pair representation

Eigen::MatrixXd to_real_pair(const Eigen::MatrixXcd& a) {
  Eigen::MatrixXd r(2 * a.rows(), 2 * a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double re = a(i, j).real(), im = a(i, j).imag();
      r(2 * i, 2 * j) = re;
      r(2 * i, 2 * j + 1) = -im;
      r(2 * i + 1, 2 * j) = im;
      r(2 * i + 1, 2 * j + 1) = re;
    }
  }
  return r;
}

Eigen::MatrixXcd from_real_pair(const Eigen::MatrixXd& a) {
  Eigen::MatrixXcd c(a.rows() / 2, a.cols() / 2);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = {a(2 * i, 2 * j), a(2 * i + 1, 2 * j)};
  return c;
}

Eigen::VectorXd to_real_pair(const Eigen::VectorXcd& v) {
  Eigen::VectorXd r(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    r[2 * i] = v[i].real();
    r[2 * i + 1] = v[i].imag();
  }
  return r;
}

Eigen::VectorXcd from_real_pair_vector(const Eigen::VectorXd& v) {
  Eigen::VectorXcd c(v.size() / 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = {v[2 * i], v[2 * i + 1]};
  return c;
}

// ---------------------------------------------------------------------------
// MeasurementOperator

MeasurementOperator::MeasurementOperator(OperatorKind kind, Field field, std::vector<Eigen::MatrixXd> blocks,
                                         int num_blocks, std::vector<int> sample_set)
    : kind_(kind), field_(field), blocks_(std::move(blocks)), num_blocks_(num_blocks),
      sample_set_(std::move(sample_set)) {
  if (blocks_.empty()) throw std::invalid_argument("MeasurementOperator: no blocks");
  if (num_blocks_ < 1) throw std::invalid_argument("MeasurementOperator: B must be >= 1");
  const Eigen::Index r = blocks_.front().rows(), c = blocks_.front().cols();
  for (const auto& blk : blocks_) {
    if (blk.rows() != r || blk.cols() != c) throw std::invalid_argument("MeasurementOperator: block shape mismatch");
  }
  if (field_ == Field::COMPLEX && (r % 2 != 0 || c % 2 != 0))
    throw std::invalid_argument("MeasurementOperator: complex blocks must be in real-pair form");
  const int div = field_ == Field::COMPLEX ? 2 : 1;
  block_rows_ = static_cast<int>(r) / div;
  block_cols_ = static_cast<int>(c) / div;
  switch (kind_) {
    case OperatorKind::BLOCK_DIAG_REPEATED:
      if (blocks_.size() != 1) throw std::invalid_argument("repeated block operator takes exactly one block");
      break;
    case OperatorKind::BLOCK_DIAG_DISTINCT:
      if (static_cast<int>(blocks_.size()) != num_blocks_)
        throw std::invalid_argument("distinct block operator takes exactly B blocks");
      break;
    default:
      if (blocks_.size() != 1 || num_blocks_ != 1)
        throw std::invalid_argument("dense operators carry a single block");
  }
}

const Eigen::MatrixXd& MeasurementOperator::block(int b) const {
  if (b < 0 || b >= num_blocks_) throw std::out_of_range("MeasurementOperator::block");
  return kind_ == OperatorKind::BLOCK_DIAG_DISTINCT ? blocks_[b] : blocks_.front();
}

Eigen::MatrixXd MeasurementOperator::effective_block(int b, CoefficientSet set) const {
  const Eigen::MatrixXd& a = block(b);
  if (field_ == Field::COMPLEX && !set.is_complex()) {
    Eigen::MatrixXd r(a.rows(), block_cols_);
    for (int j = 0; j < block_cols_; ++j) r.col(j) = a.col(2 * j);
    return r;
  }
  if (field_ == Field::REAL && set.is_complex()) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2 * a.rows(), 2 * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) r(2 * i, 2 * j) = r(2 * i + 1, 2 * j + 1) = a(i, j);
    return r;
  }
  return a;
}

Eigen::VectorXd MeasurementOperator::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int nr = native_rows(), nc = native_cols();
  if (x.size() != static_cast<Eigen::Index>(nc) * num_blocks_)
    throw std::invalid_argument("MeasurementOperator::apply: dimension mismatch");
  Eigen::VectorXd y(static_cast<Eigen::Index>(nr) * num_blocks_);
  for (int b = 0; b < num_blocks_; ++b) y.segment(b * nr, nr).noalias() = block(b) * x.segment(b * nc, nc);
  return y;
}

Eigen::VectorXd MeasurementOperator::adjoint(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const int nr = native_rows(), nc = native_cols();
  if (y.size() != static_cast<Eigen::Index>(nr) * num_blocks_)
    throw std::invalid_argument("MeasurementOperator::adjoint: dimension mismatch");
  Eigen::VectorXd x(static_cast<Eigen::Index>(nc) * num_blocks_);
  for (int b = 0; b < num_blocks_; ++b)
    x.segment(b * nc, nc).noalias() = block(b).transpose() * y.segment(b * nr, nr);
  return x;
}

Eigen::VectorXd MeasurementOperator::apply(const SignalVector& x) const {
  if (x.size() != cols()) throw std::invalid_argument("MeasurementOperator::apply: signal length mismatch");
  const CoefficientSet set = x.coeff_set();
  const int k = set.ambient_dim();
  const Eigen::Index in_len = static_cast<Eigen::Index>(k) * block_cols_;
  std::vector<Eigen::VectorXd> parts;
  Eigen::Index total = 0;
  for (int b = 0; b < num_blocks_; ++b) {
    parts.push_back(effective_block(b, set) * x.entries().segment(b * in_len, in_len));
    total += parts.back().size();
  }
  Eigen::VectorXd y(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    y.segment(at, p.size()) = p;
    at += p.size();
  }
  return y;
}

Eigen::MatrixXd MeasurementOperator::dense() const {
  const int nr = native_rows(), nc = native_cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nr) * num_blocks_,
                                            static_cast<Eigen::Index>(nc) * num_blocks_);
  for (int b = 0; b < num_blocks_; ++b) d.block(b * nr, b * nc, nr, nc) = block(b);
  return d;
}

Eigen::MatrixXcd MeasurementOperator::dense_complex() const {
  if (field_ != Field::COMPLEX) throw std::logic_error("dense_complex: operator is real");
  return from_real_pair(dense());
}

// ---------------------------------------------------------------------------
// Builders

Eigen::MatrixXd sample_use(int m, int M, Field field, Seed seed) {
  if (m < 1 || M < 1) throw std::invalid_argument("sample_use: m and M must be >= 1");
  Rng rng(derive_seed(seed, "use", 0));
  if (field == Field::REAL) {
    Eigen::MatrixXd a(m, M);
    for (int j = 0; j < M; ++j) {
      for (int i = 0; i < m; ++i) a(i, j) = rng.normal();
      a.col(j).normalize();
    }
    return a;
  }
  Eigen::MatrixXcd a(m, M);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < m; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      a(i, j) = {re, im};
    }
    a.col(j).normalize();
  }
  return to_real_pair(a);
}

MeasurementOperator make_block_diagonal(std::vector<Eigen::MatrixXd> blocks, int B, bool repeated, Field field) {
  if (B < 1) throw std::invalid_argument("make_block_diagonal: B must be >= 1");
  if (repeated && blocks.size() != 1) throw std::invalid_argument("make_block_diagonal: repeated needs one block");
  if (!repeated && static_cast<int>(blocks.size()) != B)
    throw std::invalid_argument("make_block_diagonal: distinct needs B blocks");
  const auto kind = repeated ? OperatorKind::BLOCK_DIAG_REPEATED : OperatorKind::BLOCK_DIAG_DISTINCT;
  return MeasurementOperator(kind, field, std::move(blocks), B);
}

Eigen::MatrixXd partial_dft_block(int M, const std::vector<int>& K) {
  if (M < 1) throw std::invalid_argument("partial_dft_block: M must be >= 1");
  if (K.empty()) throw std::invalid_argument("partial_dft_block: empty K");
  validate_index_set(K, M, "partial_dft_block");
  const double s = 1.0 / std::sqrt(static_cast<double>(M));
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(K.size()), M);
  for (std::size_t i = 0; i < K.size(); ++i)
    for (int t = 0; t < M; ++t) a(static_cast<Eigen::Index>(i), t) = s * dft_phase(K[i], t, M);
  return to_real_pair(a);
}

Eigen::MatrixXd real_fourier_block(int M, const std::vector<int>& freqs) {
  if (M < 1) throw std::invalid_argument("real_fourier_block: M must be >= 1");
  validate_index_set(freqs, M / 2 + 1, "real_fourier_block");
  int rows = 0;
  for (int f : freqs) rows += (f == 0 || 2 * f == M) ? 1 : 2;
  if (rows == 0) throw std::invalid_argument("real_fourier_block: empty frequency set");
  Eigen::MatrixXd a(rows, M);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(M));
  const double s2 = std::sqrt(2.0 / M);
  int r = 0;
  for (int f : freqs) {
    if (f == 0 || 2 * f == M) {
      for (int t = 0; t < M; ++t) a(r, t) = s1 * dft_phase(f, t, M).real();
      ++r;
    } else {
      for (int t = 0; t < M; ++t) {
        const cd p = dft_phase(f, t, M);
        a(r, t) = s2 * p.real();
        a(r + 1, t) = s2 * p.imag();
      }
      r += 2;
    }
  }
  return a;
}

std::vector<int> sample_real_fourier_freqs(int M, int m, Seed seed) {
  if (m < 1 || m > M) throw std::invalid_argument("sample_real_fourier_freqs: need 1 <= m <= M");
  // Non-DC, non-Nyquist frequencies available as cos/sin pairs.
  const int pairs = (M - 1) / 2;
  const bool has_nyquist = M % 2 == 0;
  std::vector<int> freqs;
  int need_pairs = m / 2;
  bool need_single = m % 2 == 1;
  if (need_pairs > pairs) {
    // Only reachable for even M with m = M or M - 1: all pairs plus DC/Nyquist.
    need_pairs = pairs;
  }
  Rng rng(derive_seed(seed, "rdft", 0));
  for (int idx : rng.choose(pairs, need_pairs)) freqs.push_back(idx + 1);
  int rows = 2 * need_pairs;
  if (need_single || rows < m) {
    freqs.insert(freqs.begin(), 0);
    ++rows;
  }
  if (rows < m && has_nyquist) {
    freqs.push_back(M / 2);
    ++rows;
  }
  if (rows != m) throw std::logic_error("sample_real_fourier_freqs: cannot reach m rows");
  return freqs;
}

MeasurementOperator aniso_sampler_2d(int T0, int T1, const std::vector<int>& K1) {
  if (T0 < 1 || T1 < 1) throw std::invalid_argument("aniso_sampler_2d: empty grid");
  if (K1.empty()) throw std::invalid_argument("aniso_sampler_2d: empty K1");
  validate_index_set(K1, T1, "aniso_sampler_2d");
  const int m = static_cast<int>(K1.size());
  const double s = 1.0 / std::sqrt(static_cast<double>(T0) * T1);
  Eigen::MatrixXcd f(static_cast<Eigen::Index>(m) * T0, static_cast<Eigen::Index>(T0) * T1);
  for (int i = 0; i < m; ++i)
    for (int k0 = 0; k0 < T0; ++k0)
      for (int t1 = 0; t1 < T1; ++t1)
        for (int t0 = 0; t0 < T0; ++t0)
          f(k0 + T0 * i, t0 + T0 * t1) = s * dft_phase(k0, t0, T0) * dft_phase(K1[i], t1, T1);
  MeasurementOperator op(OperatorKind::ANISO_2D, Field::COMPLEX, {to_real_pair(f)}, 1, K1);
  OperatorDescriptor d;
  d.source = "aniso2d";
  d.field = Field::COMPLEX;
  d.T0 = T0;
  d.T1 = T1;
  d.K = K1;
  d.m = m;
  d.M = T1;
  op.set_descriptor(d);
  return op;
}

MeasurementOperator aniso_sampler_2d(int M, const std::vector<int>& K1) { return aniso_sampler_2d(M, M, K1); }

MeasurementOperator iso_sampler_2d(int M, int n, Seed seed) {
  if (M < 1) throw std::invalid_argument("iso_sampler_2d: M must be >= 1");
  if (n < 1 || static_cast<long>(n) > static_cast<long>(M) * M)
    throw std::invalid_argument("iso_sampler_2d: need 1 <= n <= M^2");
  Rng rng(derive_seed(seed, "iso2d", 0));
  std::vector<int> picks = rng.choose(M * M, n);
  const double s = 1.0 / M;
  Eigen::MatrixXcd f(n, static_cast<Eigen::Index>(M) * M);
  for (int r = 0; r < n; ++r) {
    const int k0 = picks[r] % M, k1 = picks[r] / M;
    for (int t1 = 0; t1 < M; ++t1)
      for (int t0 = 0; t0 < M; ++t0) f(r, t0 + M * t1) = s * dft_phase(k0, t0, M) * dft_phase(k1, t1, M);
  }
  MeasurementOperator op(OperatorKind::ISO_2D, Field::COMPLEX, {to_real_pair(f)}, 1, picks);
  OperatorDescriptor d;
  d.source = "iso2d";
  d.field = Field::COMPLEX;
  d.M = M;
  d.n = n;
  d.seed = seed;
  op.set_descriptor(d);
  return op;
}

SignalVector sample_signal(const ProblemSizes& sizes, CoefficientSet set, Seed seed) {
  sizes.validate();
  const int k = set.ambient_dim();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * sizes.M * sizes.B);
  for (int b = 0; b < sizes.B; ++b) {
    Rng rng(derive_seed(seed, "block", static_cast<std::uint64_t>(b)));
    std::vector<bool> free(sizes.M, false);
    for (int p : rng.choose(sizes.M, sizes.ell)) free[p] = true;
    for (int j = 0; j < sizes.M; ++j) {
      const Eigen::Index i = (static_cast<Eigen::Index>(b) * sizes.M + j) * k;
      if (!free[j]) {
        if (set.tag() == CoeffTag::BOX01) x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        continue;
      }
      switch (set.tag()) {
        case CoeffTag::BOX01: {
          double u = 0.0;
          while (u == 0.0) u = rng.uniform();
          x[i] = u;
          break;
        }
        case CoeffTag::NONNEG: {
          double g = 0.0;
          while (g == 0.0) g = std::abs(rng.normal());
          x[i] = g;
          break;
        }
        case CoeffTag::REAL: {
          double g = 0.0;
          while (g == 0.0) g = rng.normal();
          x[i] = g;
          break;
        }
        case CoeffTag::COMPLEX: {
          double re = 0.0, im = 0.0;
          while (re == 0.0 && im == 0.0) {
            re = rng.normal() * std::numbers::sqrt2 / 2.0;
            im = rng.normal() * std::numbers::sqrt2 / 2.0;
          }
          x[i] = re;
          x[i + 1] = im;
          break;
        }
      }
    }
  }
  return SignalVector(std::move(x), set, sizes.M, sizes.B);
}

MeasurementOperator build_operator(const OperatorDescriptor& d) {
  if (d.source == "aniso2d") {
    auto op = aniso_sampler_2d(d.T0, d.T1, d.K);
    return op;
  }
  if (d.source == "iso2d") {
    if (!d.seed) throw std::invalid_argument("build_operator: iso2d needs a seed");
    return iso_sampler_2d(d.M, d.n, *d.seed);
  }
  std::vector<Eigen::MatrixXd> blocks;
  const int stored = d.repeated ? 1 : d.B;
  if (d.source == "use") {
    if (!d.seed) throw std::invalid_argument("build_operator: use needs a seed");
    for (int b = 0; b < stored; ++b) blocks.push_back(sample_use(d.m, d.M, d.field, derive_seed(*d.seed, "block", b)));
  } else if (d.source == "pdft") {
    for (int b = 0; b < stored; ++b) blocks.push_back(partial_dft_block(d.M, d.K));
  } else if (d.source == "rdft") {
    for (int b = 0; b < stored; ++b) blocks.push_back(real_fourier_block(d.M, d.K));
  } else if (d.source == "identity") {
    for (int b = 0; b < stored; ++b) blocks.push_back(Eigen::MatrixXd::Identity(d.M, d.M));
  } else {
    throw std::invalid_argument("build_operator: unknown source '" + d.source + "'");
  }
  auto op = make_block_diagonal(std::move(blocks), d.B, d.repeated, d.field);
  op.set_descriptor(d);
  return op;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const OperatorDescriptor& d) {
  j = nlohmann::json{{"source", d.source},
                     {"field", d.field == Field::COMPLEX ? "complex" : "real"},
                     {"m", d.m},
                     {"M", d.M},
                     {"B", d.B},
                     {"repeated", d.repeated},
                     {"K", d.K}};
  if (d.seed) j["seed"] = *d.seed;
  if (d.source == "aniso2d") {
    j["T0"] = d.T0;
    j["T1"] = d.T1;
  }
  if (d.source == "iso2d") j["n"] = d.n;
}

void from_json(const nlohmann::json& j, OperatorDescriptor& d) {
  d = OperatorDescriptor{};
  j.at("source").get_to(d.source);
  d.field = j.value("field", std::string("real")) == "complex" ? Field::COMPLEX : Field::REAL;
  d.m = j.value("m", 0);
  d.M = j.value("M", 0);
  d.B = j.value("B", 1);
  d.repeated = j.value("repeated", true);
  d.K = j.value("K", std::vector<int>{});
  if (j.contains("seed")) d.seed = j.at("seed").get<Seed>();
  d.T0 = j.value("T0", 0);
  d.T1 = j.value("T1", 0);
  d.n = j.value("n", 0);
}

}  // namespace ptlab
