#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "edgeroute/io.hpp"
#include "edgeroute/manifest.hpp"
#include "fixtures.hpp"

using namespace edgeroute;

namespace {

DatasetManifest synthetic_manifest(const std::vector<std::pair<std::string, int>>& counts) {
  DatasetManifest m;
  for (const auto& [tag, n] : counts)
    for (int i = 0; i < n; ++i)
      m.entries.push_back({tag + "_" + std::to_string(i) + ".png", tag + "_gt.png", tag, {}, {}});
  return m;
}

std::multiset<std::string> ids(const DatasetManifest& m) {
  std::multiset<std::string> s;
  for (const auto& e : m.entries) s.insert(e.id());
  return s;
}

}  // namespace

TEST_CASE("stratified split takes ceil(fraction*count) per modality", "[manifest]") {
  const auto m = synthetic_manifest({{"Fundus", 10}, {"OCT", 10}});
  const auto [a, b] = stratified_split(m, 0.8, 1);
  CHECK(a.count("Fundus") == 8);
  CHECK(a.count("OCT") == 8);
  CHECK(b.count("Fundus") == 2);
  CHECK(b.count("OCT") == 2);
}

TEST_CASE("stratified split over five modalities", "[manifest]") {
  const auto m = synthetic_manifest({{"Dermoscopy", 10}, {"Fundus", 10}, {"OCT", 10}, {"US", 10}, {"XRay", 10}});
  const auto [a, b] = stratified_split(m, 0.8, 99);
  CHECK(a.size() == 40);
  CHECK(b.size() == 10);
}

TEST_CASE("stratified split rounds up and absorbs representation error", "[manifest]") {
  const auto m = synthetic_manifest({{"US", 10}, {"XRay", 3}});
  const auto [a, b] = stratified_split(m, 0.7, 5);
  CHECK(a.count("US") == 7);    // 0.7 * 10 is 7.000000000000001 in binary
  CHECK(a.count("XRay") == 3);  // ceil(2.1)
}

TEST_CASE("stratified split is a deterministic partition", "[manifest][property]") {
  const auto m = synthetic_manifest({{"Fundus", 13}, {"OCT", 7}, {"US", 2}});
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto [a, b] = stratified_split(m, 0.8, seed);
    const auto [a2, b2] = stratified_split(m, 0.8, seed);
    CHECK(a.entries == a2.entries);
    CHECK(b.entries == b2.entries);
    auto all = ids(a);
    for (const auto& id : ids(b)) {
      CHECK(all.count(id) == 0);
      all.insert(id);
    }
    CHECK(all == ids(m));
    for (const auto& tag : m.modalities()) CHECK(a.count(tag) + b.count(tag) == m.count(tag));
  }
  // Different seeds do eventually choose different subsets.
  std::set<std::multiset<std::string>> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) distinct.insert(ids(stratified_split(m, 0.5, seed).first));
  CHECK(distinct.size() > 1);
}

TEST_CASE("stratified split rejects tiny strata and bad fractions", "[manifest][error]") {
  const auto m = synthetic_manifest({{"Fundus", 5}, {"OCT", 1}});
  CHECK_THROWS_AS(stratified_split(m, 0.8, 0), Error);
  const auto ok = synthetic_manifest({{"Fundus", 5}});
  CHECK_THROWS_AS(stratified_split(ok, 0.0, 0), Error);
  CHECK_THROWS_AS(stratified_split(ok, 1.0, 0), Error);
}

TEST_CASE("manifest CSV resolves paths against its directory", "[manifest]") {
  const auto dir = fixtures::scratch_dir("manifest");
  fs::create_directories(dir / "img");
  save_image(Image(2, 2, 10), dir / "img" / "a.png");
  save_image(Image(2, 2, 255), dir / "img" / "a_gt.png");
  save_image(Image(2, 2, 0), dir / "img" / "a_raw.png");
  {
    std::ofstream out(dir / "manifest.csv");
    out << "image,gt,modality,pred_raw,pred_edge\n";
    out << "img/a.png,img/a_gt.png,OCT,img/a_raw.png,\n";
  }
  const auto m = load_manifest(dir / "manifest.csv");
  REQUIRE(m.size() == 1);
  CHECK(m.entries[0].id() == "a");
  CHECK(m.entries[0].modality == "OCT");
  CHECK(m.entries[0].pred_raw.has_value());
  CHECK_FALSE(m.entries[0].pred_edge.has_value());
  CHECK(fs::equivalent(m.entries[0].image, dir / "img" / "a.png"));

  save_manifest(m, dir / "copy.csv");
  CHECK(load_manifest(dir / "copy.csv").entries == m.entries);
}

TEST_CASE("manifest loading fails on missing files and undeclared modalities", "[manifest][error]") {
  const auto dir = fixtures::scratch_dir("manifest_err");
  save_image(Image(1, 1, 0), dir / "a.png");
  {
    std::ofstream(dir / "missing.csv") << "image,gt,modality\na.png,nope.png,OCT\n";
    std::ofstream(dir / "tag.csv") << "image,gt,modality\na.png,a.png,Radiology\n";
    std::ofstream(dir / "cols.csv") << "image,modality\na.png,OCT\n";
  }
  CHECK_THROWS_AS(load_manifest(dir / "missing.csv"), Error);
  CHECK_THROWS_AS(load_manifest(dir / "tag.csv"), Error);
  CHECK(load_manifest(dir / "tag.csv", {"Radiology"}).size() == 1);
  CHECK(load_manifest(dir / "tag.csv", {"*"}).size() == 1);
  CHECK_THROWS_AS(load_manifest(dir / "cols.csv"), Error);
}

TEST_CASE("CSV splitting honours quotes", "[csv]") {
  CHECK(csv::split_line("a,\"b,c\",d") == std::vector<std::string>{"a", "b,c", "d"});
  CHECK(csv::split_line("\"say \"\"hi\"\"\",") == std::vector<std::string>{"say \"hi\"", ""});
  CHECK(csv::split_line(csv::quote("x,\"y\"")) == std::vector<std::string>{"x,\"y\""});
  CHECK_THROWS_AS(csv::split_line("\"open"), Error);
}
