#include "doctest.h"

#include "decomp/orchestrator.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace decomp;
namespace fs = std::filesystem;

TEST_CASE("CAS queries for the corpus match the checked-in golden files byte for byte") {
  const fs::path dir = fs::path(DECOMP_SOURCE_DIR) / "tests" / "golden" / "corpus";
  auto corpus = load_corpus((fs::path(DECOMP_SOURCE_DIR) / "problems").string());
  REQUIRE(corpus.size() >= 25);

  std::set<std::string> produced;
  for (const auto& e : corpus) {
    for (const auto& g : golden_queries(e)) {
      CAPTURE(g.file);
      produced.insert(g.file);
      std::ifstream in(dir / g.file, std::ios::binary);
      REQUIRE(in);
      std::stringstream ss;
      ss << in.rdbuf();
      CHECK(ss.str() == g.text);
    }
  }
  std::set<std::string> on_disk;
  for (const auto& f : fs::directory_iterator(dir)) on_disk.insert(f.path().filename().string());
  CHECK(on_disk == produced);
}
