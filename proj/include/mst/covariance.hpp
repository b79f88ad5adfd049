#pragma once

// covariance.hpp -- spatial covariance models on the periodic lattice Z/pZ,
// their factorizations, and sampling of the white-in-time environment field.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mst/stats.hpp"

namespace mst {

enum class CovKind { Constant, CircleCosine, Kernel };

struct CovarianceSpec {
  CovKind kind = CovKind::Constant;
  int p = 2;
  double q = 1.0;           // Constant
  double a = 1.0, b = 0.0;  // CircleCosine: Q(j,k) = a + b cos(2pi (j-k)/p)
  Eigen::MatrixXd kernel;   // Kernel: explicit matrix

  static CovarianceSpec constant(double q, int p) {
    CovarianceSpec s;
    s.kind = CovKind::Constant;
    s.q = q;
    s.p = p;
    return s;
  }
  static CovarianceSpec circle_cosine(double a, double b, int p) {
    CovarianceSpec s;
    s.kind = CovKind::CircleCosine;
    s.a = a;
    s.b = b;
    s.p = p;
    return s;
  }
  static CovarianceSpec matrix(Eigen::MatrixXd q) {
    CovarianceSpec s;
    s.kind = CovKind::Kernel;
    s.kernel = std::move(q);
    s.p = static_cast<int>(s.kernel.rows());
    return s;
  }
};

struct CovarianceModel {
  CovarianceSpec spec;
  Eigen::MatrixXd q;     // p x p covariance
  Eigen::MatrixXd chol;  // lower-triangular L with L L^T = q (+ jitter)
  double q0;             // max diagonal entry
  double qm;             // min entry over all pairs
  double min_eigenvalue;
  double jitter;  // diagonal shift applied before factorization, 0 if none
};

// Materializes Q, verifies positive semidefiniteness (reporting the offending
// eigenvalue otherwise), and factorizes.  Constant covariance uses its exact
// rank-one factor; other kinds use Cholesky with a 1e-12-scale diagonal
// jitter retry, since smooth lattice kernels are routinely rank-deficient.
inline CovarianceModel build_covariance(const CovarianceSpec& spec) {
  if (spec.p < 2) throw std::invalid_argument("build_covariance: need p >= 2");
  CovarianceModel m;
  m.spec = spec;
  const int p = spec.p;
  switch (spec.kind) {
    case CovKind::Constant:
      if (spec.q < 0.0) throw std::invalid_argument("build_covariance: Constant needs q >= 0");
      m.q = Eigen::MatrixXd::Constant(p, p, spec.q);
      break;
    case CovKind::CircleCosine: {
      if (!(spec.a >= spec.b && spec.b >= 0.0))
        throw std::invalid_argument("build_covariance: CircleCosine needs a >= b >= 0");
      m.q.resize(p, p);
      const double w = 2.0 * 3.141592653589793238462643383279 / p;
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) m.q(i, j) = spec.a + spec.b * std::cos(w * (i - j));
      break;
    }
    case CovKind::Kernel:
      if (spec.kernel.rows() != p || spec.kernel.cols() != p)
        throw std::invalid_argument("build_covariance: kernel must be p x p");
      if (!spec.kernel.isApprox(spec.kernel.transpose(), 1e-12))
        throw std::invalid_argument("build_covariance: kernel must be symmetric");
      m.q = spec.kernel;
      break;
  }

  m.q0 = m.q.diagonal().maxCoeff();
  m.qm = m.q.minCoeff();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.q, Eigen::EigenvaluesOnly);
  m.min_eigenvalue = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, m.q.cwiseAbs().maxCoeff());
  if (m.min_eigenvalue < -1e-10 * scale)
    throw std::domain_error("build_covariance: kernel not positive semidefinite (eigenvalue " +
                            std::to_string(m.min_eigenvalue) + ")");

  if (spec.kind == CovKind::Constant) {
    // exact rank-one factor sqrt(q) * ones * e_1^T: perfectly correlated sites
    m.chol = Eigen::MatrixXd::Zero(p, p);
    m.chol.col(0).setConstant(std::sqrt(spec.q));
    m.jitter = 0.0;
    return m;
  }

  m.jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m.q);
  if (llt.info() != Eigen::Success) {
    m.jitter = 1e-12 * scale;
    llt.compute(m.q + m.jitter * Eigen::MatrixXd::Identity(p, p));
    if (llt.info() != Eigen::Success)
      throw std::domain_error("build_covariance: Cholesky failed even with jitter");
  }
  m.chol = llt.matrixL();
  return m;
}

// One environment realization: n_t rows of field increments, each row
// distributed N(0, Q dt), independent across rows (white in time).
struct EnvironmentSlab {
  int p = 0;
  int n_t = 0;
  double dt = 0.0;
  std::vector<double> dw;  // row-major n_t x p

  double at(int k, int site) const { return dw[static_cast<std::size_t>(k) * p + site]; }
};

inline EnvironmentSlab sample_environment(const CovarianceModel& model, int n_t, double dt,
                                          RngStream& rng) {
  if (n_t < 1 || !(dt > 0.0))
    throw std::invalid_argument("sample_environment: need n_t >= 1 and dt > 0");
  const int p = model.spec.p;
  EnvironmentSlab slab;
  slab.p = p;
  slab.n_t = n_t;
  slab.dt = dt;
  slab.dw.resize(static_cast<std::size_t>(n_t) * p);
  const double root_dt = std::sqrt(dt);
  Eigen::VectorXd z(p);
  for (int k = 0; k < n_t; ++k) {
    rng.fill_normal(z.data(), static_cast<std::size_t>(p));
    Eigen::Map<Eigen::VectorXd> row(slab.dw.data() + static_cast<std::size_t>(k) * p, p);
    row.noalias() = root_dt * (model.chol * z);
  }
  return slab;
}

}  // namespace mst
