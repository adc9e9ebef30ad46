#include <gtest/gtest.h>

#include <random>

#include "gmmot/dadil.hpp"
#include "gmmot/em.hpp"
#include "gmmot/io/toy.hpp"
#include "oracles.hpp"

using namespace gmmot;

namespace {

struct Instance {
  std::vector<GaussianMixture> sources;
  GaussianMixture target;
  Dictionary dict;
};

Dictionary random_dictionary(std::mt19937_64& eng, int c_count, Eigen::Index k, Eigen::Index d,
                             Eigen::Index nc, Eigen::Index domains) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Dictionary dict;
  for (int c = 0; c < c_count; ++c) {
    Matrix m(k, d), s(k, d), g(k, nc);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        m(i, j) = 2.0 * nd(eng);
        s(i, j) = u(eng);
      }
      for (Eigen::Index y = 0; y < nc; ++y) g(i, y) = nd(eng);
    }
    dict.means.push_back(m);
    dict.stds.push_back(s);
    dict.logits.push_back(g);
  }
  dict.coords.resize(domains, c_count);
  for (Eigen::Index l = 0; l < domains; ++l) dict.coords.row(l) = oracle::random_simplex(eng, c_count).transpose();
  return dict;
}

Instance random_instance(std::mt19937_64& eng) {
  Instance in;
  for (int l = 0; l < 2; ++l) in.sources.push_back(oracle::random_gmm(eng, 4, 2, 2));
  in.target = oracle::random_gmm(eng, 4, 2);
  in.dict = random_dictionary(eng, 2, 4, 2, 2, 3);
  return in;
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(DadilGradient, MatchesCentralDifferences) {
  std::mt19937_64 eng(20);
  const double h = 1e-5;
  DadilConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const auto in = random_instance(eng);
    const auto fp = solve_dadil_plans(in.dict, in.sources, in.target, cfg);
    const auto lg = frozen_loss_grad(in.dict, in.sources, in.target, fp, cfg.beta);
    EXPECT_NEAR(lg.loss, oracle::frozen_loss_naive(in.dict, in.sources, in.target, fp, cfg.beta), 1e-9 * (1 + lg.loss));

    const Vector theta = in.dict.pack();
    const Vector grad = lg.pack();
    ASSERT_EQ(grad.size(), theta.size());
    Vector fd(theta.size());
    Dictionary probe = in.dict;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vector x = theta;
      x[i] += h;
      probe.unpack(x);
      const double up = oracle::frozen_loss_naive(probe, in.sources, in.target, fp, cfg.beta);
      x[i] -= 2 * h;
      probe.unpack(x);
      const double down = oracle::frozen_loss_naive(probe, in.sources, in.target, fp, cfg.beta);
      fd[i] = (up - down) / (2 * h);
    }
    EXPECT_LE((grad - fd).norm() / std::max(fd.norm(), 1e-12), 1e-4) << "instance " << t;
    EXPECT_LE(max_abs(grad - fd), 1e-4 * (1 + max_abs(fd)));
  }
}

TEST(DadilGradient, LossIsAffineInBetaWithFrozenPlans) {
  std::mt19937_64 eng(21);
  const auto in = random_instance(eng);
  const auto fp = solve_dadil_plans(in.dict, in.sources, in.target, DadilConfig{});
  const double l0 = frozen_loss_grad(in.dict, in.sources, in.target, fp, 0.0).loss;
  const double l1 = frozen_loss_grad(in.dict, in.sources, in.target, fp, 1.0).loss;
  const double l3 = frozen_loss_grad(in.dict, in.sources, in.target, fp, 3.0).loss;
  EXPECT_NEAR(l3 - l0, 3.0 * (l1 - l0), 1e-9 * (1 + l3));
  EXPECT_GT(l1, l0);
}

TEST(DadilGradient, PlantedDictionaryIsAGlobalMinimum) {
  // every domain equals one atom and sits at the matching simplex vertex
  std::mt19937_64 eng(22);
  Dictionary dict = random_dictionary(eng, 3, 4, 2, 2, 3);
  dict.coords = Matrix::Identity(3, 3);
  std::vector<GaussianMixture> sources{dict.atom(0), dict.atom(1)};
  const GaussianMixture target = dict.atom(2).unlabeled();
  const auto lg = dadil_loss_grad(dict, sources, target, DadilConfig{});
  EXPECT_LE(lg.loss, 1e-12);
  for (int c = 0; c < 3; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    EXPECT_LE(lg.grad_means[ci].cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(lg.grad_stds[ci].cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(lg.grad_logits[ci].cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DadilReconstruct, VertexCoordinatesGiveTheAtom) {
  std::mt19937_64 eng(23);
  const Dictionary dict = random_dictionary(eng, 3, 5, 2, 3, 2);
  for (int c = 0; c < 3; ++c) {
    Vector e = Vector::Zero(3);
    e[c] = 1.0;
    BarycenterConfig cfg;
    cfg.seed = static_cast<Seed>(c);
    const auto b = reconstruct(dict, e, cfg);
    EXPECT_LE(oracle::best_matching_error(b.means(), dict.means[static_cast<std::size_t>(c)]), 1e-9);
    EXPECT_LE(oracle::best_matching_error(b.stds(), dict.stds[static_cast<std::size_t>(c)]), 1e-9);
  }
}

TEST(DadilFit, ToyAdaptationIsAccurate) {
  io::ToyConfig tc;
  tc.seed = 3;
  const auto domains = io::make_toy(tc);
  EmConfig ec;
  ec.seed = 3;
  std::vector<GaussianMixture> sources;
  for (int l = 0; l < 3; ++l) sources.push_back(fit_labeled(domains[static_cast<std::size_t>(l)], 2, ec));
  ec.n_components = 6;
  const auto target = em_fit(domains[3].features, ec);
  DadilConfig cfg;
  cfg.n_atoms = 2;
  cfg.seed = 3;
  const auto res = dadil_fit(sources, target, cfg);
  EXPECT_GE(accuracy(res.adaptation.target_gmm, domains[3]), 0.95);
  const auto& lt = res.adaptation.loss_trace;
  ASSERT_EQ(lt.size(), 200u);
  EXPECT_LT(lt.back(), lt.front());
  ASSERT_EQ(res.adaptation.coords_trace.size(), 200u);
  for (Eigen::Index l = 0; l < res.dictionary.coords.rows(); ++l) {
    EXPECT_NEAR(res.dictionary.coords.row(l).sum(), 1.0, 1e-12);
    EXPECT_GE(res.dictionary.coords.row(l).minCoeff(), 0.0);
  }
  for (const auto& s : res.dictionary.stds) EXPECT_GE(s.minCoeff(), cfg.s_min);
}

TEST(DadilFit, SingleAtomKeepsUnitCoordinates) {
  std::mt19937_64 eng(24);
  std::vector<GaussianMixture> sources{oracle::random_gmm(eng, 3, 2, 2), oracle::random_gmm(eng, 3, 2, 2)};
  const auto target = oracle::random_gmm(eng, 3, 2);
  DadilConfig cfg;
  cfg.n_atoms = 1;
  cfg.n_iter = 20;
  const auto res = dadil_fit(sources, target, cfg);
  EXPECT_EQ(res.dictionary.coords, Matrix::Ones(3, 1));
  EXPECT_TRUE(res.adaptation.target_gmm.labeled());
}

TEST(DadilFit, DeterministicAcrossThreadCounts) {
  std::mt19937_64 eng(25);
  std::vector<GaussianMixture> sources{oracle::random_gmm(eng, 3, 2, 2), oracle::random_gmm(eng, 4, 2, 2)};
  const auto target = oracle::random_gmm(eng, 3, 2);
  DadilConfig cfg;
  cfg.n_iter = 15;
  cfg.seed = 8;
  const auto a = dadil_fit(sources, target, cfg);
  cfg.threads = 3;
  const auto b = dadil_fit(sources, target, cfg);
  EXPECT_EQ(a.dictionary.pack(), b.dictionary.pack());
  EXPECT_EQ(a.adaptation.loss_trace, b.adaptation.loss_trace);
}

TEST(DadilFit, RejectsUnlabeledSources) {
  std::mt19937_64 eng(26);
  const auto s = oracle::random_gmm(eng, 3, 2);
  EXPECT_THROW(dadil_fit({s}, s, DadilConfig{}), InvalidState);
  DadilConfig bad;
  bad.eta = 0.0;
  EXPECT_THROW(dadil_fit({oracle::random_gmm(eng, 3, 2, 2)}, s, bad), InvalidInput);
}
