/*
 * Copyright 2026 The eta-fuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "etafuse/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse::features {

LinkEmbeddingTable::LinkEmbeddingTable(std::size_t dim,
                                       std::vector<std::int64_t> ids,
                                       std::vector<double> vectors)
    : dim_(dim), ids_(std::move(ids)), vectors_(std::move(vectors)), zeros_(dim, 0.0) {
  if (vectors_.size() != ids_.size() * dim_) {
    throw ValidationError("embedding table: vector storage does not match ids x dim");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw ValidationError("embedding table: duplicate id " + std::to_string(ids_[i]));
    }
  }
}

std::span<const double> LinkEmbeddingTable::lookup(std::int64_t id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return zeros_;
  return std::span(vectors_).subspan(it->second * dim_, dim_);
}

namespace {

double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

// Cumulative unigram^0.75 distribution for negative sampling.
class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<double>& counts) {
    cumulative_.reserve(counts.size());
    double total = 0.0;
    for (const double c : counts) {
      total += std::pow(c, 0.75);
      cumulative_.push_back(total);
    }
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()),
                    cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

LinkEmbeddingTable train_skipgram(
    const std::vector<std::vector<std::int64_t>>& corpus,
    const SkipGramConfig& config) {
  if (config.dim < 2) throw ValidationError("skip-gram: dim must be >= 2");
  if (config.window < 1) throw ValidationError("skip-gram: window must be >= 1");
  if (config.negatives < 1) throw ValidationError("skip-gram: negatives must be >= 1");

  std::map<std::int64_t, double> counts;
  std::size_t n_tokens = 0;
  for (const auto& sentence : corpus) {
    for (const std::int64_t id : sentence) {
      counts[id] += 1.0;
      ++n_tokens;
    }
  }
  if (n_tokens == 0) throw ValidationError("skip-gram: empty corpus");

  std::vector<std::int64_t> ids;
  std::vector<double> frequency;
  std::unordered_map<std::int64_t, std::size_t> index;
  for (const auto& [id, count] : counts) {
    index.emplace(id, ids.size());
    ids.push_back(id);
    frequency.push_back(count);
  }
  const std::size_t vocab = ids.size();
  const std::size_t dim = config.dim;

  Rng rng(config.seed);
  std::vector<double> input(vocab * dim);
  std::vector<double> output(vocab * dim, 0.0);
  for (double& v : input) v = (rng.uniform() - 0.5) / static_cast<double>(dim);

  const NegativeSampler sampler(frequency);
  const double total_steps = static_cast<double>(config.epochs * n_tokens);
  double step = 0.0;
  std::vector<double> accum(dim);
  std::vector<std::size_t> sentence_rows;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& sentence : corpus) {
      sentence_rows.clear();
      for (const std::int64_t id : sentence) sentence_rows.push_back(index.at(id));
      const std::size_t len = sentence_rows.size();
      for (std::size_t i = 0; i < len; ++i, step += 1.0) {
        const double lr = config.learning_rate *
                          std::max(1e-4, 1.0 - step / std::max(1.0, total_steps));
        const std::size_t center = sentence_rows[i];
        double* u = &input[center * dim];
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(len - 1, i + config.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::size_t context = sentence_rows[j];
          std::fill(accum.begin(), accum.end(), 0.0);
          for (std::size_t k = 0; k <= config.negatives; ++k) {
            std::size_t target = context;
            double label = 1.0;
            if (k > 0) {
              target = sampler.draw(rng);
              if (target == context) continue;
              label = 0.0;
            }
            double* v = &output[target * dim];
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += u[d] * v[d];
            const double g = (label - sigmoid(dot)) * lr;
            for (std::size_t d = 0; d < dim; ++d) {
              accum[d] += g * v[d];
              v[d] += g * u[d];
            }
          }
          for (std::size_t d = 0; d < dim; ++d) u[d] += accum[d];
        }
      }
    }
  }
  return LinkEmbeddingTable(dim, std::move(ids), std::move(input));
}

std::vector<std::vector<std::int64_t>> link_corpus(std::span<const Trip> trips) {
  std::vector<std::vector<std::int64_t>> corpus;
  corpus.reserve(trips.size());
  for (const Trip& trip : trips) {
    std::vector<std::int64_t> sentence;
    sentence.reserve(trip.links.size());
    for (const LinkStep& step : trip.links) sentence.push_back(step.link_id);
    corpus.push_back(std::move(sentence));
  }
  return corpus;
}

std::vector<double> sequence_embedding_feature(const Trip& trip,
                                               const LinkEmbeddingTable& table) {
  std::vector<double> mean(table.dim(), 0.0);
  if (trip.links.empty()) return mean;
  for (const LinkStep& step : trip.links) {
    const auto v = table.lookup(step.link_id);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[d];
  }
  const auto n = static_cast<double>(trip.links.size());
  for (double& m : mean) m /= n;
  return mean;
}

void write_embedding_table(std::ostream& out, const LinkEmbeddingTable& table) {
  out << "eta-fuse-skipgram 1\n" << table.dim() << ' ' << table.vocabulary_size() << '\n';
  for (const std::int64_t id : table.ids()) {
    out << id;
    for (const double v : table.lookup(id)) out << ' ' << format_double(v);
    out << '\n';
  }
}

LinkEmbeddingTable read_embedding_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "eta-fuse-skipgram 1") {
    throw ParseError(1, "version", "expected 'eta-fuse-skipgram 1'");
  }
  if (!std::getline(in, line)) throw ParseError(2, "shape", "missing dim/count line");
  const auto shape = split(trim(line), ' ');
  const auto dim = shape.size() == 2 ? try_parse_int(shape[0]) : std::nullopt;
  const auto count = shape.size() == 2 ? try_parse_int(shape[1]) : std::nullopt;
  if (!dim || !count || *dim < 1 || *count < 0) {
    throw ParseError(2, "shape", "expected '<dim> <count>'");
  }
  std::vector<std::int64_t> ids;
  std::vector<double> vectors;
  for (std::int64_t r = 0; r < *count; ++r) {
    const std::size_t line_number = static_cast<std::size_t>(r) + 3;
    if (!std::getline(in, line)) throw ParseError(line_number, "row", "truncated table");
    const auto parts = split(trim(line), ' ');
    if (parts.size() != static_cast<std::size_t>(*dim) + 1) {
      throw ParseError(line_number, "row", "wrong number of values");
    }
    const auto id = try_parse_int(parts[0]);
    if (!id) throw ParseError(line_number, "id", "not an integer");
    ids.push_back(*id);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const auto v = try_parse_double(parts[k]);
      if (!v) throw ParseError(line_number, "value", "not a number");
      vectors.push_back(*v);
    }
  }
  return LinkEmbeddingTable(static_cast<std::size_t>(*dim), std::move(ids), std::move(vectors));
}

}  // namespace etafuse::features
