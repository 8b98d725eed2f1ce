#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctmg/sfc_partition.hpp"

#include <algorithm>
#include <vector>

using namespace ctmg;

TEST_CASE("subdomain count targets 2^S nodes per subdomain") {
  auto c = choose_subdomain_count({1, 11}, 10);  // 2047 nodes
  CHECK(c.count == 2);
  CHECK(!c.degenerate);

  c = choose_subdomain_count({6, 6}, 10);  // 3969 nodes
  CHECK(c.count == 4);
  CHECK(!c.degenerate);

  c = choose_subdomain_count({5, 5}, 10);  // 961 nodes, smaller than one target block
  CHECK(c.count == 1);
  CHECK(c.degenerate);

  c = choose_subdomain_count({3, 3}, 0);
  CHECK(c.count == 49);
  CHECK(!c.degenerate);

  CHECK_THROWS_AS(choose_subdomain_count({3, 3}, -1), std::invalid_argument);
}

TEST_CASE("uniform partition-of-unity weights exist only for half-integer overlap") {
  CHECK(overlap_weight(0.0) == doctest::Approx(1.0));
  CHECK(overlap_weight(0.5) == doctest::Approx(0.5));
  CHECK(overlap_weight(1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(overlap_weight(1.5) == doctest::Approx(0.25));
  CHECK_THROWS_AS(overlap_weight(0.3), std::invalid_argument);
  CHECK_THROWS_AS(overlap_weight(-0.5), std::invalid_argument);
}

TEST_CASE("disjoint split puts the remainder in the trailing ranges") {
  AnisoGrid g({4}, Box::unit(1));  // 15 nodes
  SfcDecomposition dec(g, 4, 0.0, 1);
  std::vector<Index> sizes;
  for (int i = 0; i < 4; ++i) sizes.push_back(dec.disjoint_end(i) - dec.disjoint_begin(i));
  CHECK(sizes == std::vector<Index>{3, 4, 4, 4});
  CHECK(dec.disjoint_begin(0) == 0);
  CHECK(dec.disjoint_end(3) == 15);
}

TEST_CASE("half overlap doubles interior subdomains") {
  AnisoGrid g({3, 3}, Box::unit(2));  // 49 nodes
  SfcDecomposition dec(g, 7, 0.5, 1);
  for (int i = 0; i < 7; ++i)
    CHECK(dec.disjoint_end(i) - dec.disjoint_begin(i) == 7);

  // floor(3.5) = 3 before, ceil(3.5) = 4 after: extended size 14 = 2 * 7 interior.
  for (int i = 1; i < 6; ++i) CHECK(dec.extended_size(i) == 14);
  CHECK(dec.extended_size(0) == 11);  // left slice truncated at the curve start
  CHECK(dec.extended_size(6) == 10);  // right slice truncated at the curve end

  // Away from the curve ends every node lies in exactly two extended subdomains.
  CHECK(dec.coverage(0) == 1);
  CHECK(dec.coverage(24) == 2);
  CHECK(dec.coverage(48) == 1);
  int maxcov = 0;
  for (Index p = 0; p < 49; ++p) maxcov = std::max(maxcov, dec.coverage(p));
  CHECK(maxcov == 2);

  for (int i = 0; i < 7; ++i) CHECK(dec.weight(i) == doctest::Approx(0.5));

  // Weights sum to one wherever the coverage is full.
  for (Index p = 4; p < 46; ++p) {
    Real sum = 0.0;
    for (int i = 0; i < 7; ++i)
      if (dec.extended_begin(i) <= p && p < dec.extended_end(i)) sum += dec.weight(i);
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("full overlap triples interior coverage") {
  AnisoGrid g({3, 3}, Box::unit(2));
  SfcDecomposition dec(g, 7, 1.0, 1);
  CHECK(dec.coverage(24) == 3);
  for (int i = 0; i < 7; ++i) CHECK(dec.weight(i) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("general overlap weights are reciprocal peak coverage") {
  AnisoGrid g({3, 3}, Box::unit(2));
  SfcDecomposition dec(g, 7, 0.25, 1);
  for (int i = 0; i < 7; ++i) {
    int peak = 0;
    for (Index p = dec.disjoint_begin(i); p < dec.disjoint_end(i); ++p)
      peak = std::max(peak, dec.coverage(p));
    CHECK(dec.weight(i) == doctest::Approx(1.0 / peak));
  }
}

TEST_CASE("extended node lists follow the curve") {
  AnisoGrid g({3, 3}, Box::unit(2));
  SfcDecomposition dec(g, 7, 0.5, 1);
  for (int i = 0; i < 7; ++i) {
    const auto& nodes = dec.nodes(i);
    REQUIRE(static_cast<Index>(nodes.size()) == dec.extended_size(i));
    for (Index k = 0; k < dec.extended_size(i); ++k)
      CHECK(nodes[k] == dec.order().node_at(dec.extended_begin(i) + k));
  }
}

TEST_CASE("coarse chunks split the disjoint range with leading remainders") {
  AnisoGrid g({5}, Box::unit(1));  // 31 nodes, split (10, 10, 11)
  SfcDecomposition dec(g, 3, 0.4, 4);
  CHECK(dec.chunk_offsets(1) == std::vector<Index>{0, 3, 6, 8, 10});
  CHECK(dec.chunk_offsets(2) == std::vector<Index>{0, 3, 6, 9, 11});

  SfcDecomposition single(g, 3, 0.4, 1);
  CHECK(single.chunk_offsets(1) == std::vector<Index>{0, 10});
}

TEST_CASE("decomposition validation") {
  AnisoGrid g({2, 2}, Box::unit(2));  // 9 nodes
  CHECK_THROWS_AS(SfcDecomposition(g, 0, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(SfcDecomposition(g, 10, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(SfcDecomposition(g, 2, -0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(SfcDecomposition(g, 2, 0.5, 0), std::invalid_argument);

  AnisoGrid tiny(LevelIndex{1}, Box::unit(1));  // a single node
  CHECK_THROWS_AS(SfcDecomposition(tiny, 1, 0.0, 2), std::invalid_argument);
}
