#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "gmmot/io/csv.hpp"
#include "gmmot/io/json.hpp"
#include "gmmot/io/toy.hpp"
#include "oracles.hpp"

using namespace gmmot;
namespace fs = std::filesystem;

namespace {

std::size_t parse_error_line(const std::string& text) {
  try {
    io::parse_csv(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError for:\n" << text;
  return 999;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gmmot_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Csv, ParsesLabeledAndUnlabeled) {
  const auto a = io::parse_csv("f0,f1,label\n1.5,-2,0\n3,4e-3,2\n");
  ASSERT_EQ(a.size(), 2);
  EXPECT_EQ(a.dim(), 2);
  EXPECT_EQ(a.features(1, 1), 4e-3);
  ASSERT_TRUE(a.labels.has_value());
  EXPECT_EQ(*a.labels, (std::vector<int>{0, 2}));
  EXPECT_EQ(a.n_classes, 3);

  const auto b = io::parse_csv("f0,label\r\n0.25,\r\n-1,\r\n");
  EXPECT_FALSE(b.labels.has_value());
  EXPECT_EQ(b.features(0, 0), 0.25);
}

TEST(Csv, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("f0,f1,label\n1,2,0\n1,x,0\n"), 3u);
  EXPECT_EQ(parse_error_line("f0,f1,label\n1,2,cat\n"), 2u);
  EXPECT_EQ(parse_error_line("f0,f1,label\n1,2,0\n1,2\n"), 3u);
  EXPECT_EQ(parse_error_line("f0,g1,label\n1,2,0\n"), 1u);
  EXPECT_EQ(parse_error_line("f0,f1\n1,2\n"), 1u);
  EXPECT_EQ(parse_error_line(""), 1u);
  EXPECT_EQ(parse_error_line("f0,label\n"), 0u);
  EXPECT_EQ(parse_error_line("f0,label\n1,0\n2,\n"), 0u);
}

TEST(Csv, RoundTripIsExact) {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> nd(0.0, 1e3);
  LabeledDataset ds{Matrix(30, 3), std::vector<int>(30), 4};
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) ds.features(i, j) = nd(eng);
    (*ds.labels)[static_cast<std::size_t>(i)] = static_cast<int>(i % 4);
  }
  const auto back = io::parse_csv(io::format_csv(ds));
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(*back.labels, *ds.labels);
  EXPECT_EQ(io::format_csv(back), io::format_csv(ds));
}

TEST(Csv, SaveAndLoadThroughFiles) {
  const auto dir = scratch_dir("csv");
  LabeledDataset ds{Matrix::Identity(2, 2), std::nullopt, 0};
  io::save_csv(ds, dir / "nested" / "x.csv");
  EXPECT_FALSE(fs::exists(dir / "nested" / "x.csv.tmp"));
  const auto back = io::load_csv(dir / "nested" / "x.csv");
  EXPECT_EQ(back.features, ds.features);
  EXPECT_FALSE(back.labels.has_value());
  EXPECT_THROW(io::load_csv(dir / "missing.csv"), InvalidInput);
}

TEST(Json, MixtureRoundTripIsBitExact) {
  std::mt19937_64 eng(2);
  for (int t = 0; t < 10; ++t) {
    const auto g = oracle::random_gmm(eng, 1 + t % 4, 2, t % 2 ? 3 : 0);
    const std::string text = io::dump(io::to_json(g));
    const auto back = io::gmm_from_json(io::parse(text));
    EXPECT_EQ(back.weights(), g.weights());
    EXPECT_EQ(back.means(), g.means());
    EXPECT_EQ(back.stds(), g.stds());
    EXPECT_EQ(back.labeled(), g.labeled());
    EXPECT_EQ(io::dump(io::to_json(back)), text);
  }
}

TEST(Json, RejectsMalformedMixtures) {
  EXPECT_THROW(io::parse("{\"d\": 1,"), ParseError);
  EXPECT_THROW(io::gmm_from_json(io::parse(R"({"d": 1, "weights": [1]})")), ParseError);
  EXPECT_THROW(io::gmm_from_json(io::parse(R"({"d": 2, "weights": [1], "means": [[0]], "stds": [[1]]})")),
               ParseError);
  EXPECT_THROW(io::gmm_from_json(io::parse(R"({"d": 1, "weights": [0.5], "means": [[0]], "stds": [[1]]})")),
               ParseError);
}

TEST(Json, PlanAndDictionaryRoundTrip) {
  std::mt19937_64 eng(3);
  const auto p = oracle::random_gmm(eng, 3, 2), q = oracle::random_gmm(eng, 4, 2);
  const auto plan = solve_transport(p.weights(), q.weights(), mixture_cost(p, q));
  const auto back = io::plan_from_json(io::parse(io::dump(io::to_json(plan))));
  EXPECT_EQ(back.omega, plan.omega);
  EXPECT_EQ(back.objective, plan.objective);

  Dictionary dict = initial_dictionary(2, 3, 2, 2, 3, 5);
  dict.logits[1](0, 1) = 0.75;
  const auto d2 = io::dictionary_from_json(io::parse(io::dump(io::to_json(dict))));
  EXPECT_EQ(d2.pack(), dict.pack());
}

TEST(Json, NonFiniteValuesAreRefused) {
  io::Json j;
  j["x"] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(io::dump(j), NumericalFailure);
}

TEST(Toy, ShapesAndLabels) {
  io::ToyConfig cfg;
  const auto doms = io::make_toy(cfg);
  ASSERT_EQ(doms.size(), 4u);
  for (const auto& d : doms) {
    EXPECT_EQ(d.size(), 600);
    EXPECT_EQ(d.dim(), 2);
    EXPECT_EQ(d.n_classes, 3);
    ASSERT_TRUE(d.labels.has_value());
    EXPECT_EQ(*d.labels, *doms[0].labels);
  }
}

TEST(Toy, DomainsAreAffineImagesOfTheFirst) {
  io::ToyConfig cfg;
  const auto doms = io::make_toy(cfg);
  for (int l = 1; l < 4; ++l) {
    const double a = cfg.rot_step * l;
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    for (Eigen::Index i = 0; i < 600; i += 37) {
      const Eigen::Vector2d x = doms[0].features.row(i).transpose();
      const Eigen::Vector2d y = r * x + l * Eigen::Vector2d(cfg.shift_step[0], cfg.shift_step[1]);
      EXPECT_LE((doms[static_cast<std::size_t>(l)].features.row(i).transpose() - y).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Toy, ClassMeansSitNearTheirCenters) {
  io::ToyConfig cfg;
  const auto base = io::make_toy(cfg)[0];
  for (int c = 0; c < cfg.n_classes; ++c) {
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < base.size(); ++i)
      if ((*base.labels)[static_cast<std::size_t>(i)] == c) acc += base.features.row(i).transpose();
    acc /= cfg.n_per_class;
    const double a = 2 * M_PI * c / cfg.n_classes + M_PI / 2;
    // 4 standard errors of a 200-sample mean with std 0.8
    EXPECT_LE((acc - cfg.class_radius * Eigen::Vector2d(std::cos(a), std::sin(a))).norm(), 4 * 0.8 / std::sqrt(200.0));
  }
}

TEST(Toy, SeededAndValidated) {
  io::ToyConfig cfg;
  cfg.seed = 9;
  EXPECT_EQ(io::make_toy(cfg)[2].features, io::make_toy(cfg)[2].features);
  cfg.n_domains = 1;
  EXPECT_THROW(io::make_toy(cfg), InvalidInput);
}

TEST(Toy, IdentityMapGivesIdenticalDomains) {
  io::ToyConfig cfg;
  cfg.shift_step.setZero();
  cfg.rot_step = 0.0;
  const auto doms = io::make_toy(cfg);
  for (const auto& d : doms) EXPECT_EQ(d.features, doms[0].features);
}

TEST(Toy, PureShiftMovesClassMeans) {
  io::ToyConfig cfg;
  cfg.rot_step = 0.0;
  cfg.shift_step << 1.0, 0.0;
  const auto doms = io::make_toy(cfg);
  for (int l = 1; l < cfg.n_domains; ++l)
    for (int c = 0; c < cfg.n_classes; ++c) {
      Eigen::RowVector2d m0 = Eigen::RowVector2d::Zero(), ml = Eigen::RowVector2d::Zero();
      for (Eigen::Index i = 0; i < doms[0].size(); ++i)
        if ((*doms[0].labels)[static_cast<std::size_t>(i)] == c) {
          m0 += doms[0].features.row(i);
          ml += doms[static_cast<std::size_t>(l)].features.row(i);
        }
      const Eigen::RowVector2d diff = (ml - m0) / cfg.n_per_class;
      EXPECT_NEAR(diff[0], l, 3 * 0.8 / std::sqrt(200.0));
      EXPECT_NEAR(diff[1], 0.0, 3 * 0.4 / std::sqrt(200.0));
    }
}

TEST(Toy, HalfTurnNegatesThenShifts) {
  io::ToyConfig cfg;
  cfg.rot_step = M_PI;
  const auto doms = io::make_toy(cfg);
  const Matrix expect = (-doms[0].features).rowwise() + cfg.shift_step.transpose();
  EXPECT_LE((doms[1].features - expect).cwiseAbs().maxCoeff(), 1e-12);
}
