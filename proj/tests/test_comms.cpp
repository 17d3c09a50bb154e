#include <gtest/gtest.h>

#include "smdt/comms.hpp"
#include "smdt/error.hpp"

using namespace smdt;

namespace {

// Hand sums of the tabulated per-component extremes, in ms.
constexpr double kDtMax = 153.41 + 1.74;
constexpr double kSvcMax = 10.13 + 500.97 + (56.29 + 201.07) + 2 * 42.13;
constexpr double kSvcSingleMax = 10.13 + 500.97 + (56.29 + 201.07) + 42.13;
constexpr double kSvcMin = 2.56 + 500.97 + (42.72 + 173.27) + 2 * 20.16;

}  // namespace

TEST(Latency, PinnedSums) {
  Rng rng(1);
  EXPECT_NEAR(kDtMax, 155.15, 1e-9);
  EXPECT_NEAR(kSvcMax, 852.72, 1e-9);
  EXPECT_NEAR(kSvcSingleMax, 810.59, 1e-9);
  EXPECT_NEAR(kSvcMin, 759.84, 1e-9);
  EXPECT_NEAR(1000 * sample_dt_latency(LatencyModel::pinned_max(), rng), kDtMax, 1e-9);
  EXPECT_NEAR(1000 * sample_service_latency(LatencyModel::pinned_max(), rng), kSvcMax, 1e-9);
  EXPECT_NEAR(1000 * sample_service_latency(LatencyModel::pinned_max(), rng, ServiceLatencyMode::kSingleV2c),
              kSvcSingleMax, 1e-9);
  EXPECT_NEAR(1000 * sample_service_latency(LatencyModel::pinned_min(), rng), kSvcMin, 1e-9);
}

TEST(Latency, ZeroAndFixed) {
  Rng rng(2);
  EXPECT_EQ(sample_service_latency(LatencyModel::zero(), rng), 0.0);
  EXPECT_EQ(sample_dt_latency(LatencyModel::zero(), rng), 0.0);
  auto m = LatencyModel::zero();
  m.rsu = LatencySpec::fixed(100);
  m.i2c = LatencySpec::fixed(2);
  EXPECT_DOUBLE_EQ(sample_dt_latency(m, rng), 0.102);
}

TEST(Latency, MeasuredSamplesStayWithinPinnedBounds) {
  Rng rng(3);
  auto m = LatencyModel::field_measured();
  for (int i = 0; i < 20000; ++i) {
    double dt = 1000 * sample_dt_latency(m, rng);
    double svc = 1000 * sample_service_latency(m, rng);
    EXPECT_GE(dt, 70.01 + 1.10 - 1e-9);
    EXPECT_LE(dt, kDtMax + 1e-9);
    EXPECT_GE(svc, kSvcMin - 1e-9);
    EXPECT_LE(svc, kSvcMax + 1e-9);
  }
}

TEST(Latency, TriangularRespectsBoundsAndMean) {
  LatencySpec s{10, 40, LatencyDist::kTriangular, 20.0};
  Rng rng(4);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double x = s.sample_ms(rng);
    ASSERT_GE(x, 10);
    ASSERT_LE(x, 40);
    sum += x;
  }
  EXPECT_NEAR(sum / n, 20.0, 0.1);
}

TEST(Deadline, Examples) {
  EXPECT_NEAR(service_deadline_s(20 / 3.6), 0.91111, 1e-5);
  EXPECT_TRUE(check_deadline(0.852, 20 / 3.6));
  EXPECT_FALSE(check_deadline(0.912, 20 / 3.6));
  EXPECT_EQ(service_deadline_s(0), 0.0);
}

TEST(Deadline, MonotoneInSpeed) {
  for (double t : {0.1, 0.5, 0.9, 1.5}) {
    bool prev = false;
    for (double v = 0; v <= 20; v += 0.25) {
      bool ok = check_deadline(t, v);
      EXPECT_TRUE(!prev || ok) << t << " " << v;
      prev = ok;
    }
  }
}

TEST(Deliver, EdgesAndRate) {
  Rng rng(5);
  EXPECT_TRUE(deliver(1.0, rng));
  EXPECT_FALSE(deliver(0.0, rng));
  const int n = 100000;
  int ok = 0;
  for (int i = 0; i < n; ++i) ok += deliver(0.9953, rng) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(ok) / n, 0.9953, 0.002);
}

TEST(Kpi, MeasuredModelPasses) {
  auto s = monte_carlo_latency(LatencyModel::field_measured(), 50000, 7);
  auto r = kpi_report(s, KpiBudget{}, 20 / 3.6);
  EXPECT_TRUE(r.flow("ssms_e2e").pass);
  EXPECT_TRUE(r.flow("info_e2e").pass);
  EXPECT_TRUE(r.flow("t_svc").pass);
  EXPECT_TRUE(r.dt_below_svc);
  ASSERT_TRUE(r.ssms_pdr);
  EXPECT_NEAR(*r.ssms_pdr, 0.9953, 0.002);
  EXPECT_EQ(r.ssms_reliability_pass, true);
  EXPECT_TRUE(r.all_pass());
}

TEST(Kpi, SlowV2cFailsInfoBudget) {
  auto m = LatencyModel::field_measured();
  m.v2c = LatencySpec::fixed(150);
  auto r = kpi_report(monte_carlo_latency(m, 100, 1), KpiBudget{}, 20 / 3.6);
  EXPECT_FALSE(r.flow("info_e2e").pass);
  EXPECT_FALSE(r.all_pass());
}

TEST(Kpi, LowPdrFailsReliability) {
  auto m = LatencyModel::field_measured();
  m.pdr_ssms = 0.9;
  auto r = kpi_report(monte_carlo_latency(m, 20000, 1), KpiBudget{}, 20 / 3.6);
  EXPECT_EQ(r.ssms_reliability_pass, false);
}

TEST(Kpi, EmptySamplesIsReportError) {
  EXPECT_THROW(kpi_report(LatencySamples{}, KpiBudget{}, 5), ReportError);
  auto r = kpi_report(monte_carlo_latency(LatencyModel::zero(), 1, 1), KpiBudget{}, 5);
  EXPECT_THROW(r.flow("nope"), ReportError);
}

TEST(Kpi, SameSeedSameSamples) {
  auto a = monte_carlo_latency(LatencyModel::field_measured(), 1000, 9);
  auto b = monte_carlo_latency(LatencyModel::field_measured(), 1000, 9);
  EXPECT_EQ(a.svc_ms, b.svc_ms);
  EXPECT_EQ(a.ssms_delivered, b.ssms_delivered);
}

TEST(ParseLatency, OverridesAndErrors) {
  auto src = JsonSource::parse(R"({"v2c": {"fixed_ms": 30}, "rsu": {"min_ms": 1, "max_ms": 5, "dist": "triangular"},
    "pdr_ssms": 0.99})",
                               "lat.json");
  auto m = parse_latency(JsonNode(src));
  EXPECT_EQ(m.v2c.min_ms, 30.0);
  EXPECT_EQ(m.v2c.max_ms, 30.0);
  EXPECT_EQ(m.rsu.dist, LatencyDist::kTriangular);
  EXPECT_EQ(m.pdr_ssms, 0.99);
  EXPECT_EQ(m.cloud_plan.max_ms, 201.07);

  auto bad = JsonSource::parse("{\n\"pdr_info\": 1.5}", "bad.json");
  try {
    parse_latency(JsonNode(bad));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:2"), std::string::npos) << e.what();
  }
  auto inverted = JsonSource::parse(R"({"i2c": {"min_ms": 5, "max_ms": 1}})", "inv.json");
  EXPECT_THROW(parse_latency(JsonNode(inverted)), ConfigError);
  auto dist = JsonSource::parse(R"({"i2c": {"dist": "gamma"}})", "d.json");
  EXPECT_THROW(parse_latency(JsonNode(dist)), ConfigError);
}

TEST(Kpi, SlowV2cMissesDeadline) {
  auto m = LatencyModel::field_measured();
  m.v2c = LatencySpec::fixed(500);
  auto r = kpi_report(monte_carlo_latency(m, 100, 1), KpiBudget{}, 20 / 3.6);
  EXPECT_FALSE(r.flow("t_svc").pass);
  EXPECT_FALSE(r.flow("t_svc_single_v2c").pass);
}

TEST(Kpi, ZeroModelPassesEveryBudget) {
  auto r = kpi_report(monte_carlo_latency(LatencyModel::zero(), 100, 1), KpiBudget{}, 20 / 3.6);
  EXPECT_TRUE(r.flow("ssms_e2e").pass);
  EXPECT_TRUE(r.flow("t_svc").pass);
  EXPECT_FALSE(r.dt_below_svc);
}
