#include <doctest.h>

#include "properties.hpp"

using namespace dbevo;
using namespace dbevo::testing;

namespace {

constexpr int kModels = 1000;

void report(const PropertyRun& r) {
  CHECK(r.runs == kModels);
  // a few failures are enough to diagnose; the count says the rest
  for (std::size_t i = 0; i < std::min<std::size_t>(r.failures.size(), 5); ++i) FAIL_CHECK(r.failures[i]);
  CHECK(r.failures.size() == 0);
}

}  // namespace

TEST_CASE("coherent subsets partition the potential impact") {
  auto r = partition_property(20240611, kModels);
  report(r);
  MESSAGE("runs with several subsets: " << r.exercised);
  CHECK(r.exercised > kModels / 20);
}

TEST_CASE("random decisions give patches the simulator accepts") {
  auto r = patch_validity_property(777, kModels);
  report(r);
  MESSAGE("runs with decisions: " << r.exercised);
  CHECK(r.exercised > kModels / 4);
}

TEST_CASE("drops run dependents first and creates run dependees first") {
  auto r = ordering_property(4242, kModels);
  report(r);
  CHECK(r.exercised > kModels / 2);
}
