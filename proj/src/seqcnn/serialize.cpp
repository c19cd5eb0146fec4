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

#include "etafuse/seqcnn/serialize.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse::seqcnn {

namespace {

constexpr const char* kMagic = "eta-fuse-seqcnn";

std::string metric_text(double v) { return std::isnan(v) ? "nan" : format_double(v); }

void write_values(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.size(); ++i) out << ' ' << format_double(m.data()[i]);
}

void write_vocab(std::ostream& out, const char* name, const Vocabulary& vocab) {
  out << "vocab " << name << ' ' << vocab.first_row() << ' ' << vocab.oov_row() << ' '
      << vocab.ids().size();
  for (const std::int64_t id : vocab.ids()) out << ' ' << id;
  out << '\n';
}

void write_standardizer(std::ostream& out, const char* name, const Standardizer& s) {
  out << "standardizer " << name << ' ' << s.mean.size();
  for (const double v : s.mean) out << ' ' << format_double(v);
  for (const double v : s.scale) out << ' ' << format_double(v);
  out << '\n';
}

using Reader = TokenReader;

Vocabulary read_vocab(Reader& r, const char* name) {
  r.expect("vocab");
  const std::string got = r.word("vocab");
  if (got != name) throw ParseError(r.line(), "vocab", "expected vocabulary '" + std::string(name) + "'");
  const std::size_t first = r.count("first_row");
  const std::size_t oov = r.count("oov_row");
  const std::size_t n = r.count("vocab_size");
  std::vector<std::int64_t> ids(n);
  for (auto& id : ids) id = r.integer("vocab_id");
  return Vocabulary(std::move(ids), first, oov);
}

Standardizer read_standardizer(Reader& r, const char* name) {
  r.expect("standardizer");
  const std::string got = r.word("standardizer");
  if (got != name) {
    throw ParseError(r.line(), "standardizer", "expected standardizer '" + std::string(name) + "'");
  }
  const std::size_t n = r.count("standardizer_width");
  Standardizer s;
  s.mean.resize(n);
  s.scale.resize(n);
  for (double& v : s.mean) v = r.real("mean");
  for (double& v : s.scale) v = r.real("scale");
  return s;
}

void read_values(Reader& r, Matrix& m, const std::string& name) {
  const std::size_t rows = r.count("rows");
  const std::size_t cols = r.count("cols");
  if (static_cast<Index>(rows) != m.rows() || static_cast<Index>(cols) != m.cols()) {
    throw ParseError(r.line(), name, "shape does not match the configuration");
  }
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.real("value");
}

}  // namespace

void save_model(const SeqCnnModel& model, std::ostream& out) {
  const ModelConfig& c = model.config;
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "config embed_dim " << c.embed_dim << '\n';
  out << "config truncation " << truncation_name(c.truncation) << '\n';
  out << "config max_seq_len " << c.max_seq_len << '\n';
  out << "config cross_max_len " << c.cross_max_len << '\n';
  out << "config mlp_widths " << c.mlp_widths.size();
  for (const int w : c.mlp_widths) out << ' ' << w;
  out << '\n';
  out << "config head_width " << c.head_width << '\n';
  out << "config learning_rate " << format_double(c.learning_rate) << '\n';
  out << "config batch_size " << c.batch_size << '\n';
  out << "config epochs " << c.epochs << '\n';
  out << "config seed " << c.seed << '\n';
  out << "config output_scale " << format_double(c.output_scale) << '\n';
  out << "trained " << (model.trained ? 1 : 0) << '\n';
  write_vocab(out, "link", model.link_vocab);
  write_vocab(out, "cross", model.cross_vocab);
  write_vocab(out, "driver", model.driver_vocab);
  out << "step_scale " << format_double(model.step_scale.link_time) << ' '
      << format_double(model.step_scale.link_ratio) << ' '
      << format_double(model.step_scale.link_status) << ' '
      << format_double(model.step_scale.cross_time) << '\n';
  write_standardizer(out, "dense", model.dense_norm);
  write_standardizer(out, "head", model.head_norm);
  out << "history " << model.history.size() << '\n';
  for (const EpochMetrics& e : model.history) {
    out << e.epoch << ' ' << metric_text(e.train_mape) << ' ' << metric_text(e.val_mape) << '\n';
  }
  const auto params = model.parameters();
  for (const Tensor* p : params) {
    out << "tensor " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols();
    write_values(out, p->value);
    out << '\n';
  }
  out << "optimizer " << model.optimizer.step << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const bool have = i < model.optimizer.first_moment.size();
    const Matrix zero = Matrix::Zero(params[i]->value.rows(), params[i]->value.cols());
    const Matrix& m = have ? model.optimizer.first_moment[i] : zero;
    const Matrix& v = have ? model.optimizer.second_moment[i] : zero;
    out << "moment " << params[i]->name << ' ' << m.rows() << ' ' << m.cols();
    write_values(out, m);
    out << '\n';
    out << "moment " << params[i]->name << ' ' << v.rows() << ' ' << v.cols();
    write_values(out, v);
    out << '\n';
  }
  out << "end\n";
}

void save_model(const SeqCnnModel& model, const std::filesystem::path& path) {
  std::ostringstream buffer;
  save_model(model, buffer);
  write_file_atomic(path, buffer.str());
}

SeqCnnModel load_model(std::istream& in) {
  Reader r(in);
  const std::string magic = r.word("magic");
  if (magic != kMagic) throw ParseError(1, "magic", "not a seqcnn model file");
  const std::int64_t version = r.integer("version");
  if (version != kModelFormatVersion) {
    throw ValidationError("seqcnn model version " + std::to_string(version) +
                          " is not supported (expected " +
                          std::to_string(kModelFormatVersion) + ")");
  }
  SeqCnnModel m;
  ModelConfig& c = m.config;
  const auto config_key = [&](const char* key) {
    r.expect("config");
    r.expect(key);
  };
  config_key("embed_dim");
  c.embed_dim = static_cast<int>(r.integer("embed_dim"));
  config_key("truncation");
  c.truncation = parse_truncation(r.word("truncation"));
  config_key("max_seq_len");
  c.max_seq_len = r.count("max_seq_len");
  config_key("cross_max_len");
  c.cross_max_len = r.count("cross_max_len");
  config_key("mlp_widths");
  c.mlp_widths.resize(r.count("mlp_widths"));
  for (int& w : c.mlp_widths) w = static_cast<int>(r.integer("mlp_width"));
  config_key("head_width");
  c.head_width = static_cast<int>(r.integer("head_width"));
  config_key("learning_rate");
  c.learning_rate = r.real("learning_rate");
  config_key("batch_size");
  c.batch_size = r.count("batch_size");
  config_key("epochs");
  c.epochs = static_cast<int>(r.integer("epochs"));
  config_key("seed");
  c.seed = r.unsigned_integer("seed");
  config_key("output_scale");
  c.output_scale = r.real("output_scale");
  validate(c);

  r.expect("trained");
  m.trained = r.integer("trained") != 0;
  m.link_vocab = read_vocab(r, "link");
  m.cross_vocab = read_vocab(r, "cross");
  m.driver_vocab = read_vocab(r, "driver");
  r.expect("step_scale");
  m.step_scale.link_time = r.real("step_scale");
  m.step_scale.link_ratio = r.real("step_scale");
  m.step_scale.link_status = r.real("step_scale");
  m.step_scale.cross_time = r.real("step_scale");
  m.dense_norm = read_standardizer(r, "dense");
  m.head_norm = read_standardizer(r, "head");
  r.expect("history");
  m.history.resize(r.count("history"));
  for (EpochMetrics& e : m.history) {
    e.epoch = static_cast<int>(r.integer("epoch"));
    e.train_mape = r.real("train_mape");
    e.val_mape = r.real("val_mape");
  }

  m.allocate();
  const auto params = m.parameters();
  for (Tensor* p : params) {
    r.expect("tensor");
    const std::string name = r.word("tensor");
    if (name != p->name) throw ParseError(r.line(), "tensor", "expected tensor '" + p->name + "'");
    read_values(r, p->value, name);
  }
  r.expect("optimizer");
  m.optimizer.step = r.integer("optimizer");
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Matrix* moment : {&m.optimizer.first_moment[i], &m.optimizer.second_moment[i]}) {
      r.expect("moment");
      const std::string name = r.word("moment");
      if (name != params[i]->name) {
        throw ParseError(r.line(), "moment", "expected moment for '" + params[i]->name + "'");
      }
      read_values(r, *moment, name);
    }
  }
  r.expect("end");
  return m;
}

SeqCnnModel load_model(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return load_model(in);
  } catch (const ParseError& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace etafuse::seqcnn
