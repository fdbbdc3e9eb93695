// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "corag/core.hpp"

namespace corag {

// Corpus file: one JSON object per line with `id`, `text` and optional
// `gold_for`. Dataset file: one JSON object per line with `id`, `text`,
// `gold_answers` and `candidate_doc_ids`. Text is normalized on load.

Corpus read_corpus(std::istream& in);
Dataset read_dataset(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_dataset(std::ostream& out, const Dataset& dataset);

Corpus load_corpus(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace corag
