// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Both config syntaxes are flattened to `section.key -> value` (top-level
// keys have no section) and built by the same code.

#include <json.hpp>

#include <cmath>
#include <set>

#include "nbkd/pipeline.hpp"
#include "nbkd/util.hpp"

namespace nbkd {

namespace {

using FlatConfig = std::map<std::string, std::string>;

const std::set<std::string> kSections = {"data", "features", "mira", "hooks"};

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  for (const auto &item : detail::split(value, ',')) {
    auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path &base, std::string_view p) {
  std::filesystem::path path{std::string(p)};
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

double to_double(const std::string &key, const std::string &value) {
  auto v = parse_double(value);
  if (!v || !std::isfinite(*v)) throw Error("config: '" + key + "' is not a number: " + value);
  return *v;
}

long long to_int(const std::string &key, const std::string &value) {
  std::string_view s = value;
  bool neg = !s.empty() && s.front() == '-';
  if (neg) s.remove_prefix(1);
  auto v = detail::parse_index(s);
  if (!v) throw Error("config: '" + key + "' is not an integer: " + value);
  return neg ? -static_cast<long long>(*v) : static_cast<long long>(*v);
}

PipelineConfig build(const FlatConfig &flat, const std::filesystem::path &base) {
  PipelineConfig c;
  for (const auto &[key, value] : flat) {
    auto dot = key.find('.');
    std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section.empty()) {
      if (name == "workdir") c.workdir = resolve(base, value);
      else if (name == "iterations_max") c.iterations_max = static_cast<int>(to_int(key, value));
      else if (name == "min_delta") c.min_delta = to_double(key, value);
      else if (name == "top_k_models") {
        auto k = to_int(key, value);
        if (k < 1) throw Error("config: top_k_models must be at least 1");
        c.top_k_models = static_cast<std::size_t>(k);
      } else if (name == "parallelism") {
        auto p = to_int(key, value);
        if (p < 1) throw Error("config: parallelism must be at least 1");
        c.parallelism = static_cast<unsigned>(p);
      } else if (name == "label_format") c.label_format = parse_label_format(value);
      else throw Error("config: unknown key '" + key + "'");
    } else if (section == "data") {
      if (name == "tune_src") c.tune.source = resolve(base, value);
      else if (name == "dev_src") c.dev.source = resolve(base, value);
      else if (name == "transfer_src") c.transfer_source = resolve(base, value);
      else if (name == "tune_refs" || name == "dev_refs") {
        auto &refs = name == "tune_refs" ? c.tune.refs : c.dev.refs;
        for (const auto &r : split_list(value)) refs.push_back(resolve(base, r));
      } else throw Error("config: unknown key '" + key + "'");
    } else if (section == "features") {
      if (name == "passthrough") c.passthrough = split_list(value);
      else if (name == "native")
        for (const auto &n : split_list(value)) c.native.push_back(parse_native_feature(n));
      else if (name == "external") c.external = split_list(value);
      else throw Error("config: unknown key '" + key + "'");
    } else if (section == "mira") {
      if (name == "c") c.mira.c = to_double(key, value);
      else if (name == "epochs") c.mira.epochs = static_cast<int>(to_int(key, value));
      else if (name == "seed") c.mira.seed = static_cast<std::uint64_t>(to_int(key, value));
      else if (name == "init") c.mira.init = parse_init_mode(value);
      else if (name == "init_weights") c.mira.given = read_weights(resolve(base, value));
      else throw Error("config: unknown key '" + key + "'");
    } else if (section == "hooks") {
      c.hooks[name] = value;
    } else {
      throw Error("config: unknown section '" + section + "'");
    }
  }
  return c;
}

void put(FlatConfig &flat, const std::string &key, std::string value) {
  if (!flat.emplace(key, std::move(value)).second)
    throw Error("config: key '" + key + "' given twice");
}

std::string json_scalar(const std::string &key, const nlohmann::json &v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string out;
    for (const auto &item : v) {
      if (!out.empty()) out += ',';
      out += json_scalar(key, item);
    }
    return out;
  }
  throw Error("config: unsupported value for '" + key + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  if (workdir.empty()) throw Error("config: workdir is required");
  if (iterations_max < 1) throw Error("config: iterations_max must be at least 1");
  if (!(min_delta >= 0.0)) throw Error("config: min_delta must be non-negative");
  if (tune.source.empty() || tune.refs.empty()) throw Error("config: tune_src and tune_refs are required");
  if (dev.source.empty() || dev.refs.empty()) throw Error("config: dev_src and dev_refs are required");
  if (transfer_source.empty()) throw Error("config: transfer_src is required");
  if (passthrough.empty() && native.empty() && external.empty())
    throw Error("config: no features declared");
  if (!hooks.contains("generate_nbest")) throw Error("config: missing hook 'generate_nbest'");
  for (const auto &name : external)
    if (!hooks.contains("score_" + name))
      throw Error("config: missing hook 'score_" + name + "' for external feature '" + name + "'");
  if (top_k_models < 1) throw Error("config: top_k_models must be at least 1");
  mira.validate();
}

PipelineConfig parse_config_text(std::string_view text, const std::filesystem::path &base_dir) {
  FlatConfig flat;
  std::string section;
  std::size_t lineno = 0;
  for (const auto &raw : detail::split(text, '\n')) {
    ++lineno;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "config: unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (!kSections.contains(section))
        throw ParseError(lineno, "config: unknown section '" + section + "'");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "config: expected KEY = VALUE");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(lineno, "config: empty key");
    put(flat, section.empty() ? key : section + "." + key, value);
  }
  return build(flat, base_dir);
}

PipelineConfig parse_config_json(std::string_view text, const std::filesystem::path &base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw Error("config: top level must be an object");
  FlatConfig flat;
  for (const auto &[key, value] : doc.items()) {
    if (value.is_object()) {
      if (!kSections.contains(key)) throw Error("config: unknown section '" + key + "'");
      for (const auto &[k2, v2] : value.items())
        put(flat, key + "." + k2, json_scalar(key + "." + k2, v2));
    } else {
      put(flat, key, json_scalar(key, value));
    }
  }
  return build(flat, base_dir);
}

PipelineConfig load_config(const std::filesystem::path &path) {
  auto text = detail::read_file(path);
  auto base = std::filesystem::absolute(path).parent_path();
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_config_json(text, base);
  return parse_config_text(text, base);
}

}  // namespace nbkd
