#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tnet/errors.hpp"
#include "tnet/linalg.hpp"
#include "tnet/rng.hpp"

using namespace tnet;

namespace {
Eigen::MatrixXd random_symmetric(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      a(i, j) = rng.next_gaussian();
      a(j, i) = a(i, j);
    }
  }
  return a;
}

Eigen::MatrixXd random_spd(int n, Rng& rng) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.next_gaussian();
  return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}
}  // namespace

TEST_CASE("rng determinism and stream separation") {
  Rng a(42), b(42);
  Eigen::VectorXd va = gaussian_vector(a, 5);
  Eigen::VectorXd vb = gaussian_vector(b, 5);
  CHECK(va.isApprox(vb, 0.0));

  Rng c(42), d(43);
  int differing = 0;
  for (int i = 0; i < 100; ++i) {
    if (c.next_u64() != d.next_u64()) ++differing;
  }
  CHECK(differing == 100);

  // split is a pure function of (seed, stream), not of consumed draws.
  Rng e(7);
  Rng child_before = e.split(3);
  e.next_u64();
  Rng child_after = e.split(3);
  CHECK(child_before.next_u64() == child_after.next_u64());
  Rng other = e.split(4);
  CHECK(e.split(3).next_u64() != other.next_u64());
}

TEST_CASE("rng gaussian moments") {
  Rng rng(123);
  const Eigen::VectorXd v = gaussian_vector(rng, 100000);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (v.size() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
  Rng rng2(5);
  CHECK(gaussian_vector(rng2, 0).size() == 0);
}

TEST_CASE("rng uniform index stays in range") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.uniform_index(7) < 7);
  }
  CHECK_THROWS_AS(rng.uniform_index(0), ContractViolation);
}

TEST_CASE("sym_eig identity and diagonal") {
  const SymEigResult id = sym_eig(Eigen::MatrixXd::Identity(4, 4));
  CHECK(id.eigenvalues.isApprox(Eigen::VectorXd::Ones(4), 1e-12));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  const SymEigResult r = sym_eig(d);
  CHECK(r.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(r.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(r.eigenvectors.col(0).isApprox(Eigen::Vector2d(1, 0), 1e-12));
  CHECK(r.eigenvectors.col(1).isApprox(Eigen::Vector2d(0, 1), 1e-12));
}

TEST_CASE("sym_eig reconstruction, trace, orthonormality, ordering, signs") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd a = random_symmetric(6, rng);
    const SymEigResult r = sym_eig(a);
    const Eigen::MatrixXd recon =
        r.eigenvectors * r.eigenvalues.asDiagonal() * r.eigenvectors.transpose();
    CHECK((recon - a).norm() / a.norm() < 1e-8);
    CHECK(std::abs(a.trace() - r.eigenvalues.sum()) <=
          1e-8 * std::max(1.0, std::abs(a.trace())));
    const Eigen::MatrixXd vtv = r.eigenvectors.transpose() * r.eigenvectors;
    CHECK((vtv - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-8);
    for (int j = 0; j + 1 < 6; ++j) CHECK(r.eigenvalues[j] >= r.eigenvalues[j + 1]);
    for (int j = 0; j < 6; ++j) {
      Eigen::Index arg = 0;
      r.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(r.eigenvectors(arg, j) >= 0.0);
    }
  }
  // Cross-check eigenvalues against the independent Jacobi solver.
  const Eigen::MatrixXd a = random_symmetric(6, rng);
  const SymEigResult r = sym_eig(a);
  const oracles::JacobiResult j = oracles::jacobi_sym_eig(a);
  CHECK((r.eigenvalues - j.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sym_eig rejects bad input") {
  CHECK_THROWS_AS(sym_eig(Eigen::MatrixXd::Zero(2, 3)), ContractViolation);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 2.0, 3.0, 1.0;
  CHECK_THROWS_AS(sym_eig(asym), ContractViolation);
}

TEST_CASE("cholesky identity and reconstruction") {
  const Eigen::MatrixXd l = cholesky(Eigen::MatrixXd::Identity(3, 3));
  CHECK(l.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));

  Eigen::MatrixXd a(2, 2);
  a << 4.0, 2.0, 2.0, 3.0;
  const Eigen::MatrixXd la = cholesky(a);
  CHECK(((la * la.transpose()) - a).norm() / a.norm() < 1e-12);
  CHECK((la.diagonal().array() > 0.0).all());
}

TEST_CASE("cholesky rejects indefinite input") {
  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;  // eigenvalues 2 and 0
  CHECK_THROWS_AS(cholesky(singular), DefinitenessError);
  Eigen::MatrixXd negative(2, 2);
  negative << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(cholesky(negative), DefinitenessError);
}

TEST_CASE("cholesky solve property on random SPD systems") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd a = random_spd(5, rng);
    const Eigen::VectorXd b = gaussian_vector(rng, 5);
    const Eigen::VectorXd x = cholesky_solve(cholesky(a), b);
    CHECK((a * x - b).norm() / b.norm() < 1e-8);
  }
}

TEST_CASE("percentile linear interpolation") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(percentile(v, 1.0) == doctest::Approx(1.99).epsilon(1e-12));
  CHECK(percentile(v, 0.0) == doctest::Approx(1.0));
  CHECK(percentile(v, 100.0) == doctest::Approx(100.0));
  CHECK(percentile({5.0}, 50.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(percentile({}, 1.0), ContractViolation);
  CHECK_THROWS_AS(percentile({1.0}, 101.0), ContractViolation);
}
