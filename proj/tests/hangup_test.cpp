#include <gtest/gtest.h>

#include <cmath>

#include "hrgc/hangup.hpp"
#include "test_support.hpp"

namespace hrgc {
namespace {

using testing::hump_delta;
using testing::triangular_hump;

VehicleGeometry vehicle(double wheelbase, double clearance, std::string label = "test") {
  VehicleGeometry v;
  v.wheelbase = wheelbase;
  v.clearance_wheelbase = clearance;
  v.label = std::move(label);
  return v;
}

/// Random profile whose stations lie on a 5 cm lattice, so a 1 cm resample keeps every vertex.
Profile lattice_profile(RandomStream& rng, double length) {
  std::vector<double> s{0.0}, z{0.0};
  while (s.back() < length) {
    s.push_back(std::round((s.back() + 0.05 * static_cast<double>(1 + rng.below(20))) * 100.0) / 100.0);
    z.push_back(z.back() + rng.normal(0.0, 0.04));
  }
  return Profile(s, z);
}

TEST(ClassifyLevel, BoundariesGoToSaferLevel) {
  EXPECT_EQ(classify_level(0.5), 1);
  EXPECT_EQ(classify_level(0.1016), 1);
  EXPECT_EQ(classify_level(0.1015), 2);
  EXPECT_EQ(classify_level(0.0508), 2);
  EXPECT_EQ(classify_level(0.05), 3);
  EXPECT_EQ(classify_level(0.0), 3);
  EXPECT_EQ(classify_level(-1e-12), 4);
  EXPECT_EQ(classify_level(-3.0), 4);
  EXPECT_THROW(classify_level(NAN), ArgumentError);
}

TEST(ClassifyLevel, MonotoneNonIncreasingInDelta) {
  int prev = 4;
  for (double d = -0.2; d <= 0.3; d += 0.0005) {
    int level = classify_level(d);
    EXPECT_LE(level, prev);
    prev = level;
  }
}

TEST(MinClearance, FlatProfileGivesClearance) {
  auto r = analyze_crossing(testing::flat_profile(20.0, 3.0), vehicle(10.36, 0.23));
  EXPECT_NEAR(r.delta_min, 0.23, 1e-12);
  EXPECT_EQ(r.level, 1);
  for (const auto& p : r.clearance_curve) EXPECT_NEAR(p.delta, 0.23, 1e-12);
}

TEST(MinClearance, TriangularHumpMatchesClosedForm) {
  // Low Boy worst case on a 0.3 m hump with 6 m half-length.
  auto hump = triangular_hump(0.3, 6.0, 2.0);
  auto r = analyze_crossing(hump, vehicle(11.89, 0.18));
  EXPECT_NEAR(r.delta_min, -0.11725, 1e-6);
  EXPECT_NEAR(hump_delta(0.18, 0.3, 11.89, 6.0), -0.11725, 1e-15);
  EXPECT_EQ(r.level, 4);
  EXPECT_NEAR(r.worst_rear_axle_station, 8.0 - 11.89 / 2.0, 0.01);
  EXPECT_NEAR(r.worst_interference_station, 8.0, 1e-9);

  // Belly Dump median on the same hump.
  auto b = analyze_crossing(hump, vehicle(10.06, 0.32));
  EXPECT_NEAR(b.delta_min, 0.0685, 1e-6);
  EXPECT_EQ(b.level, 2);
}

TEST(MinClearance, ClosedFormAcrossGeometries) {
  RandomStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double h = rng.uniform(0.02, 0.8);
    // Half-length on the 1 cm grid so the resampled hump keeps its apex.
    const double L = std::round(rng.uniform(3.0, 9.0) * 100.0) / 100.0;
    const double W = rng.uniform(0.3, 1.9) * L;
    const double c = rng.uniform(0.1, 0.5);
    auto r = min_clearance(triangular_hump(h, L, 1.0), vehicle(W, c));
    // The swept rear axle lands within e = 5 mm of centred, which raises the minimum by 2 h e^2 / (L W).
    const double exact = hump_delta(c, h, W, L);
    const double offset = 2.0 * h * 0.005 * 0.005 / (L * W);
    EXPECT_GE(r.delta_min, exact - 1e-9);
    EXPECT_LE(r.delta_min, exact + offset + 1e-9) << "h=" << h << " L=" << L << " W=" << W;
  }
}

TEST(MinClearance, VehicleLongerThanProfileThrows) {
  EXPECT_THROW(min_clearance(testing::flat_profile(5.0), vehicle(10.0, 0.2)), RangeError);
  EXPECT_THROW(min_clearance(testing::flat_profile(20.0), vehicle(-1.0, 0.2)), ArgumentError);
  EXPECT_THROW(clearance_at_position(testing::flat_profile(20.0), vehicle(10.0, 0.2), 15.0), RangeError);
}

TEST(MinClearance, ExactFitHasOnePosition) {
  auto r = min_clearance(testing::flat_profile(10.0), vehicle(10.0, 0.2));
  EXPECT_EQ(r.clearance_curve.size(), 1u);
  EXPECT_NEAR(r.delta_min, 0.2, 1e-12);
}

TEST(MinClearance, InvariantUnderAddedGradeAndShift) {
  RandomStream rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Profile p = lattice_profile(rng, 25.0);
    const double a = rng.uniform(-5, 5), b = rng.uniform(-0.08, 0.08);
    std::vector<double> z2;
    for (std::size_t i = 0; i < p.size(); ++i) z2.push_back(p.elevations()[i] + a + b * p.stations()[i]);
    Profile graded(std::vector<double>(p.stations().begin(), p.stations().end()), z2);
    std::vector<double> shifted_s;
    for (double s : p.stations()) shifted_s.push_back(s + 100.0);
    Profile shifted(shifted_s, std::vector<double>(p.elevations().begin(), p.elevations().end()));
    auto v = vehicle(9.0, 0.25);
    const double base = min_clearance(p, v).delta_min;
    EXPECT_NEAR(min_clearance(graded, v).delta_min, base, 1e-9);
    EXPECT_NEAR(min_clearance(shifted, v).delta_min, base, 1e-9);
  }
}

TEST(MinClearance, ClearanceIsAdditiveAndElevationScalesGap) {
  RandomStream rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Profile p = lattice_profile(rng, 25.0);
    const double base = min_clearance(p, vehicle(8.0, 0.2)).delta_min;
    EXPECT_NEAR(min_clearance(p, vehicle(8.0, 0.35)).delta_min, base + 0.15, 1e-12);

    const double k = rng.uniform(0.2, 3.0);
    std::vector<double> z;
    for (double e : p.elevations()) z.push_back(k * e);
    Profile scaled(std::vector<double>(p.stations().begin(), p.stations().end()), z);
    EXPECT_NEAR(min_clearance(scaled, vehicle(8.0, 0.2)).delta_min - 0.2, k * (base - 0.2), 1e-9);
  }
}

TEST(MinClearance, LongerWheelbaseNeverHelpsOnHump) {
  auto hump = triangular_hump(0.4, 8.0, 3.0);
  double prev = 1e9;
  for (double W = 2.0; W <= 16.0; W += 0.5) {
    double d = min_clearance(hump, vehicle(W, 0.3)).delta_min;
    EXPECT_LE(d, prev + 1e-12);
    prev = d;
  }
}

TEST(MinClearance, HigherHumpNeverHelps) {
  double prev = 1e9;
  for (double h = 0.0; h <= 1.0; h += 0.05) {
    double d = min_clearance(triangular_hump(h, 6.0, 2.0), vehicle(10.0, 0.3)).delta_min;
    EXPECT_LE(d, prev + 1e-12);
    prev = d;
  }
}

TEST(MinClearance, CurveMinimumIsReported) {
  RandomStream rng(12);
  Profile p = lattice_profile(rng, 30.0);
  auto r = min_clearance(p, vehicle(7.5, 0.2), HangupOptions{0.01, 0.05});
  ASSERT_FALSE(r.clearance_curve.empty());
  double m = 1e9;
  for (const auto& c : r.clearance_curve) m = std::min(m, c.delta);
  EXPECT_EQ(m, r.delta_min);
  EXPECT_NEAR(r.clearance_curve[1].rear_axle_station - r.clearance_curve[0].rear_axle_station, 0.05, 1e-12);
  EXPECT_EQ(clearance_at_position(p, vehicle(7.5, 0.2), r.worst_rear_axle_station).delta, r.delta_min);
}

TEST(ClearanceAtPosition, MatchesBruteForceOnLatticeProfiles) {
  RandomStream rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    Profile p = lattice_profile(rng, 20.0);
    VehicleGeometry v = vehicle(0.01 * static_cast<double>(300 + rng.below(900)), rng.uniform(0.1, 0.4));
    if (trial % 3 == 1) v.rear_overhang = Overhang{0.01 * static_cast<double>(50 + rng.below(200)), 0.3};
    if (trial % 3 == 2) v.front_overhang = Overhang{0.01 * static_cast<double>(50 + rng.below(200)), 0.25};
    const double rear_extent = v.rear_overhang ? v.rear_overhang->length : 0.0;
    const double front_extent = v.front_overhang ? v.front_overhang->length : 0.0;
    const double span = p.last_station() - rear_extent - front_extent - v.wheelbase;
    for (int k = 0; k < 5; ++k) {
      const double rear = rear_extent + std::floor(rng.uniform(0.0, span) * 100.0) / 100.0;
      const double expected = testing::brute_force_clearance(p, v, rear);
      EXPECT_NEAR(clearance_at_position(p, v, rear).delta, expected, 1e-7) << "trial " << trial;
    }
  }
}

TEST(ClearanceAtPosition, NeverAboveBruteForceOnIrregularProfiles) {
  // With stations off the resample grid the engine sees the resampled polyline; it stays within
  // a few millimetres of a dense scan of the original.
  RandomStream rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    Profile p = testing::random_profile(rng, 60, 0.4);
    VehicleGeometry v = vehicle(rng.uniform(3.0, 10.0), 0.25);
    const double rear = rng.uniform(0.0, p.last_station() - v.wheelbase);
    EXPECT_NEAR(clearance_at_position(p, v, rear).delta, testing::brute_force_clearance(p, v, rear), 5e-3);
  }
}

TEST(Overhang, TailStrikesHillsideWhenDescending) {
  // High flat, 2 m ramp down 1 m, low flat. With the rear axle at the foot of the ramp a 3 m
  // tail reaches back over the high ground: 0.3 - 1.0 below the level chord.
  Profile p({0, 10, 12, 30}, {1, 1, 0, 0});
  VehicleGeometry v = vehicle(5.0, 0.3);
  const double without = min_clearance(p, v).delta_min;
  v.rear_overhang = Overhang{3.0, 0.3};
  auto r = min_clearance(p, v);
  EXPECT_LT(r.delta_min, without);
  EXPECT_NEAR(r.delta_min, -0.7, 1e-9);
  EXPECT_EQ(r.direction, Direction::Forward);
  EXPECT_GE(r.worst_interference_station, 9.0);
  EXPECT_LE(r.worst_interference_station, 10.0 + 1e-9);
}

TEST(Overhang, ReverseTraversalGovernsOnRisingRamp) {
  // The same crossing driven from the other side.
  Profile p({0, 18, 20, 30}, {0, 0, 1, 1});
  VehicleGeometry v = vehicle(5.0, 0.3);
  v.rear_overhang = Overhang{3.0, 0.3};
  auto r = min_clearance(p, v);
  EXPECT_EQ(r.direction, Direction::Reverse);
  EXPECT_NEAR(r.delta_min, -0.7, 1e-9);
  // Travelling toward decreasing station the rear axle is the higher-station one.
  auto check = clearance_at_position(p, detail::reversed(v), r.worst_rear_axle_station - v.wheelbase);
  EXPECT_NEAR(check.delta, r.delta_min, 1e-12);
  // The tail is level with the upper flat, so any station in [20, 21] is a valid arg-min.
  EXPECT_GE(r.worst_interference_station, 20.0);
  EXPECT_LE(r.worst_interference_station, 21.0 + 1e-9);
  for (const auto& c : r.clearance_curve) {
    EXPECT_GE(c.rear_axle_station, v.wheelbase - 1e-9);
    EXPECT_LE(c.rear_axle_station, 30.0 - 3.0 + 1e-9);
  }
}

TEST(Overhang, FrontOverhangIsSweptBothWays) {
  Profile p({0, 18, 20, 30}, {0, 0, 1, 1});
  VehicleGeometry v = vehicle(5.0, 0.3);
  v.front_overhang = Overhang{3.0, 0.3};
  EXPECT_NEAR(min_clearance(p, v).delta_min, -0.7, 1e-9);
}

TEST(Overhang, MirrorSymmetry) {
  RandomStream rng(40);
  for (int trial = 0; trial < 8; ++trial) {
    Profile p = lattice_profile(rng, 25.0);
    VehicleGeometry v = vehicle(6.0, 0.2);
    v.rear_overhang = Overhang{2.0, 0.25};
    const double a = min_clearance(p, v).delta_min;
    const double b = min_clearance(detail::mirrored(p), detail::reversed(v)).delta_min;
    EXPECT_NEAR(a, b, 1e-9);
    EXPECT_LE(a, min_clearance(p, vehicle(6.0, 0.2)).delta_min + 0.05);
  }
}

std::vector<CrossingProfile> three_crossings() {
  return {{"severe", triangular_hump(0.5, 6.0, 4.0, "severe")},
          {"flat", testing::flat_profile(20.0, 0.0, "flat")},
          {"mild", triangular_hump(0.1, 6.0, 4.0, "mild")}};
}

TEST(Network, ThreeCrossingLowBoyMedian) {
  auto crossings = three_crossings();
  std::vector<VehicleType> types{VehicleType::LowBoy};
  auto summary = analyze_network(crossings, load_bundled_stats(), Scenario::Median, types);
  auto rows = result_rows(summary);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].crossing_id, "flat");
  EXPECT_EQ(rows[1].crossing_id, "mild");
  EXPECT_EQ(rows[2].crossing_id, "severe");
  EXPECT_NEAR(rows[0].delta_min_m, 0.23, 1e-9);
  EXPECT_NEAR(rows[1].delta_min_m, hump_delta(0.23, 0.1, 10.36, 6.0), 1e-6);
  EXPECT_NEAR(rows[2].delta_min_m, hump_delta(0.23, 0.5, 10.36, 6.0), 1e-6);
  EXPECT_EQ(rows[0].level, 1);
  EXPECT_EQ(rows[1].level, 1);
  EXPECT_EQ(rows[2].level, 4);
  EXPECT_EQ(summary.counts.at(VehicleType::LowBoy), (LevelCounts{2, 0, 0, 1}));
  EXPECT_EQ(summary.worst_counts(), (LevelCounts{2, 0, 0, 1}));
}

TEST(Network, CountsPartitionCrossingsForEveryTypeAndScenario) {
  auto crossings = three_crossings();
  auto stats = load_bundled_stats();
  for (auto sc : kAllScenarios) {
    auto summary = analyze_network(crossings, stats, sc, kAllVehicleTypes);
    EXPECT_TRUE(summary.failures().empty());
    for (auto t : kAllVehicleTypes) {
      const auto& c = summary.counts.at(t);
      EXPECT_EQ(c[0] + c[1] + c[2] + c[3], crossings.size());
    }
  }
}

TEST(Network, StricterScenarioNeverLowersLevel) {
  auto crossings = three_crossings();
  auto stats = load_bundled_stats();
  auto med = result_rows(analyze_network(crossings, stats, Scenario::Median, kAllVehicleTypes));
  auto mid = result_rows(analyze_network(crossings, stats, Scenario::Percentile75_25, kAllVehicleTypes));
  auto worst = result_rows(analyze_network(crossings, stats, Scenario::WorstCase, kAllVehicleTypes));
  ASSERT_EQ(med.size(), worst.size());
  for (std::size_t i = 0; i < med.size(); ++i) {
    // Affine chord difference: only guaranteed on the convex humps used here.
    EXPECT_LE(med[i].level, mid[i].level);
    EXPECT_LE(mid[i].level, worst[i].level);
  }
}

TEST(Network, ResultsIndependentOfJobs) {
  auto crossings = three_crossings();
  RandomStream rng(50);
  for (int i = 0; i < 9; ++i) {
    Profile p = lattice_profile(rng, 30.0);
    crossings.push_back({"rand" + std::to_string(i), p});
  }
  auto stats = load_bundled_stats();
  auto one = serialize_results_csv(result_rows(analyze_network(crossings, stats, Scenario::WorstCase, kAllVehicleTypes, {}, 1)));
  auto four = serialize_results_csv(result_rows(analyze_network(crossings, stats, Scenario::WorstCase, kAllVehicleTypes, {}, 4)));
  EXPECT_EQ(one, four);
}

TEST(Network, FailuresAreRecordedNotThrown) {
  std::vector<CrossingProfile> crossings{{"short", testing::flat_profile(4.0)}, {"ok", testing::flat_profile(20.0)}};
  std::vector<VehicleType> types{VehicleType::LowBoy, VehicleType::Firetruck};
  auto summary = analyze_network(crossings, load_bundled_stats(), Scenario::Median, types);
  auto failures = summary.failures();
  ASSERT_EQ(failures.size(), 2u);
  EXPECT_EQ(failures[0]->crossing_id, "short");
  EXPECT_FALSE(failures[0]->error.empty());
  EXPECT_EQ(result_rows(summary).size(), 2u);
  EXPECT_EQ(summary.worst.size(), 1u);
}

TEST(ResultsCsv, SixDecimalsAndRoundTrip) {
  std::vector<ResultRow> rows{{"A", "low_boy", "median", 0.1436666666, 8.0, 1}, {"B", "low_boy", "median", -0.0000001, 2.5, 4}};
  auto text = serialize_results_csv(rows);
  EXPECT_EQ(text,
            "crossing_id,vehicle_type,scenario,delta_min_m,worst_station_m,level\n"
            "A,low_boy,median,0.143667,8.000000,1\n"
            "B,low_boy,median,0.000000,2.500000,4\n");
  auto back = parse_results_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].level, 1);
  EXPECT_EQ(serialize_results_csv(back), text);
  EXPECT_THROW(parse_results_csv("crossing_id,vehicle_type,scenario,delta_min_m,worst_station_m,level\nA,x,y,0,0,5\n"),
               ParseError);
}

} // namespace
} // namespace hrgc
