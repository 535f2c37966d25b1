// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/corpus.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "l1ra/rng.hpp"

namespace l1ra {
namespace {

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.uniform_int(N)];
}

constexpr std::array<std::string_view, 8> kNouns = {"cat", "dog", "bird", "fox", "owl", "mouse", "horse", "frog"};
constexpr std::array<std::string_view, 6> kAdjectives = {"small", "quick", "lazy", "red", "old", "green"};
constexpr std::array<std::string_view, 6> kVerbs = {"sees", "chases", "likes", "finds", "hears", "follows"};
constexpr std::array<std::string_view, 5> kPlaces = {"garden", "forest", "river", "barn", "field"};

void noun_phrase(Rng& rng, std::string& out) {
  out += rng.bernoulli(0.5) ? "the " : "a ";
  if (rng.bernoulli(0.4)) {
    out += pick(rng, kAdjectives);
    out += ' ';
  }
  out += pick(rng, kNouns);
}

void sentence(Rng& rng, std::string& out) {
  noun_phrase(rng, out);
  out += ' ';
  out += pick(rng, kVerbs);
  out += ' ';
  noun_phrase(rng, out);
  if (rng.bernoulli(0.3)) {
    out += " in the ";
    out += pick(rng, kPlaces);
  }
  out += rng.bernoulli(0.2) ? " and " : ". ";
}

}  // namespace

std::vector<int> byte_tokens(std::string_view text) {
  std::vector<int> tokens;
  tokens.reserve(text.size());
  for (char ch : text) tokens.push_back(static_cast<int>(static_cast<unsigned char>(ch)));
  return tokens;
}

std::string synthetic_grammar_text(std::size_t n_bytes, std::uint64_t seed) {
  Rng rng(seed);
  std::string out;
  out.reserve(n_bytes + 64);
  while (out.size() < n_bytes) sentence(rng, out);
  out.resize(n_bytes);
  return out;
}

Corpus make_corpus(const std::vector<int>& tokens, int window_len) {
  if (tokens.empty()) throw std::invalid_argument("corpus is empty");
  if (window_len < 2) throw std::invalid_argument("corpus window length must be >= 2");
  const auto len = static_cast<std::size_t>(window_len);
  const std::size_t n_windows = tokens.size() / len;
  if (n_windows == 0) throw std::invalid_argument("corpus shorter than one window");
  Corpus corpus;
  for (std::size_t i = 0; i < n_windows; ++i) {
    Window w(tokens.begin() + static_cast<std::ptrdiff_t>(i * len),
             tokens.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
    const std::size_t slot = i % 20;
    if (slot < 18) {
      corpus.train.push_back(std::move(w));
    } else if (slot == 18) {
      corpus.val.push_back(std::move(w));
    } else {
      corpus.test.push_back(std::move(w));
    }
  }
  return corpus;
}

Corpus tokenize_corpus_text(std::string_view text, int window_len) { return make_corpus(byte_tokens(text), window_len); }

Corpus tokenize_corpus(const std::filesystem::path& path, int window_len) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open corpus " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw std::invalid_argument("corpus " + path.string() + " is empty");
  return tokenize_corpus_text(text, window_len);
}

}  // namespace l1ra
