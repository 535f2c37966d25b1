// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace l1ra {

using Window = std::vector<int>;

/// Fixed-length token windows split by window index: indices with i % 20 in
/// [0, 18) train, 18 validation, 19 test.
struct Corpus {
  std::vector<Window> train;
  std::vector<Window> val;
  std::vector<Window> test;
};

inline constexpr int kByteVocab = 256;

/// One token per byte, value 0..255.
std::vector<int> byte_tokens(std::string_view text);

/// Text from a small probabilistic grammar of short English-like sentences.
/// Identical for identical (n_bytes, seed).
std::string synthetic_grammar_text(std::size_t n_bytes, std::uint64_t seed);

/// Chunks tokens into floor(n / window_len) non-overlapping windows and splits them.
Corpus make_corpus(const std::vector<int>& tokens, int window_len);

/// Byte-level corpus from a file. Throws std::invalid_argument if it is empty.
Corpus tokenize_corpus(const std::filesystem::path& path, int window_len);
Corpus tokenize_corpus_text(std::string_view text, int window_len);

}  // namespace l1ra
