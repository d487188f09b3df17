#include "decomp/problem.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace decomp {

namespace {

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

CorpusEntry parse_corpus_entry(const std::string& text) {
  CorpusEntry e;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    auto colon = t.find(':');
    if (colon == std::string::npos) throw std::runtime_error("corpus line without ':' : " + t);
    std::string key = strip(t.substr(0, colon));
    std::string value = strip(t.substr(colon + 1));
    if (key == "id") {
      e.id = value;
    } else if (key == "statement") {
      e.statement = value;
    } else if (key == "expected") {
      e.expected = value;
    } else if (key == "tags") {
      std::istringstream tags(value);
      std::string tag;
      while (std::getline(tags, tag, ',')) {
        tag = strip(tag);
        if (!tag.empty()) e.tags.push_back(tag);
      }
    } else if (key == "allow_unconstrained") {
      e.allow_unconstrained = value == "true";
    } else {
      throw std::runtime_error("unknown corpus field '" + key + "'");
    }
  }
  if (e.id.empty() || e.statement.empty()) throw std::runtime_error("corpus entry needs id and statement");
  return e;
}

std::string render_corpus_entry(const CorpusEntry& e) {
  std::string out = "id: " + e.id + "\nstatement: " + e.statement + "\n";
  if (!e.expected.empty()) out += "expected: " + e.expected + "\n";
  if (!e.tags.empty()) {
    out += "tags: ";
    for (std::size_t i = 0; i < e.tags.size(); ++i) out += (i ? ", " : "") + e.tags[i];
    out += "\n";
  }
  if (e.allow_unconstrained) out += "allow_unconstrained: true\n";
  return out;
}

std::vector<CorpusEntry> load_corpus(const std::string& dir) {
  std::vector<CorpusEntry> out;
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() != ".problem") continue;
    std::ifstream in(f.path());
    std::stringstream ss;
    ss << in.rdbuf();
    out.push_back(parse_corpus_entry(ss.str()));
  }
  std::sort(out.begin(), out.end(), [](const CorpusEntry& a, const CorpusEntry& b) { return a.id < b.id; });
  return out;
}

std::optional<CorpusEntry> find_problem(const std::vector<CorpusEntry>& corpus, const std::string& id) {
  for (const auto& e : corpus)
    if (e.id == id) return e;
  return std::nullopt;
}

}  // namespace decomp
