// SPDX-License-Identifier: Apache-2.0
#include "corag/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "corag/text.hpp"

namespace corag {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw IoError("line " + std::to_string(lineno) + ": " + e.what());
  }
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto rec = parse_line(line, lineno);
    try {
      fn(rec);
    } catch (const json::exception& e) {
      throw IoError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  for_each_record(in, [&](const json& rec) {
    std::set<std::string> gold;
    if (rec.contains("gold_for")) {
      for (const auto& g : rec.at("gold_for")) gold.insert(g.get<std::string>());
    }
    corpus.add(Document(rec.at("id").get<std::string>(),
                        normalize_text(rec.at("text").get<std::string>()),
                        std::move(gold)));
  });
  return corpus;
}

Dataset read_dataset(std::istream& in) {
  Dataset out;
  for_each_record(in, [&](const json& rec) {
    out.emplace_back(
        rec.at("id").get<std::string>(),
        normalize_text(rec.at("text").get<std::string>()),
        rec.at("gold_answers").get<std::vector<std::string>>(),
        rec.at("candidate_doc_ids").get<std::vector<std::string>>());
  });
  return out;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& [id, doc] : corpus) {
    json rec = {{"id", id}, {"text", join_tokens(doc.text)}};
    if (!doc.gold_for.empty()) rec["gold_for"] = doc.gold_for;
    out << rec.dump() << '\n';
  }
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& q : dataset) {
    json rec = {{"id", q.id},
                {"text", join_tokens(q.text)},
                {"gold_answers", q.gold_answers},
                {"candidate_doc_ids", q.candidate_doc_ids}};
    out << rec.dump() << '\n';
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << bytes;
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return read_corpus(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return read_dataset(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ostringstream ss;
  write_corpus(ss, corpus);
  write_file(path, ss.str());
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ostringstream ss;
  write_dataset(ss, dataset);
  write_file(path, ss.str());
}

}  // namespace corag
