// Copyright 2026 The vssm-jscc Authors
//
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

#include "vjscc/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vjscc {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config error: bad value '" + value +
                              "' for key '" + key + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, value);
    out.push_back(parse_int(key, item));
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

std::string format_double(double v) {
  if (std::isinf(v)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

AppConfig AppConfig::desk_defaults() {
  AppConfig cfg;
  cfg.model = ModelConfig::desk();
  return cfg;
}

const char* channel_kind_name(ChannelKind kind) {
  return kind == ChannelKind::awgn ? "awgn" : "rayleigh";
}

ChannelKind parse_channel_kind(const std::string& name) {
  if (name == "awgn") return ChannelKind::awgn;
  if (name == "rayleigh") return ChannelKind::rayleigh;
  throw std::invalid_argument("config error: unknown channel '" + name +
                              "' (expected awgn|rayleigh)");
}

const char* csi_mode_name(CsiMode mode) {
  return mode == CsiMode::off ? "off" : "embed";
}

CsiMode parse_csi_mode(const std::string& name) {
  if (name == "off") return CsiMode::off;
  if (name == "embed") return CsiMode::embed;
  throw std::invalid_argument("config error: unknown csi mode '" + name +
                              "' (expected off|embed)");
}

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double("snrs", item));
  }
  return out;
}

std::string format_snr(double snr) {
  if (std::isinf(snr)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", snr);
  return buf;
}

void apply_config_kv(AppConfig& cfg, const std::string& key,
                     const std::string& value) {
  if (key == "image_size") cfg.model.image_size = parse_int(key, value);
  else if (key == "channels") cfg.model.channels = parse_int_list(key, value);
  else if (key == "blocks") cfg.model.blocks = parse_int_list(key, value);
  else if (key == "cbr") {
    std::size_t slash = value.find('/');
    if (slash == std::string::npos) {
      cfg.model.cbr_num = parse_int(key, value);
      cfg.model.cbr_den = 1;
    } else {
      cfg.model.cbr_num = parse_int(key, trim(value.substr(0, slash)));
      cfg.model.cbr_den = parse_int(key, trim(value.substr(slash + 1)));
    }
    if (cfg.model.cbr_num < 1 || cfg.model.cbr_den < 1) bad_value(key, value);
  } else if (key == "csi_mode") cfg.model.csi_mode = parse_csi_mode(value);
  else if (key == "state_dim") cfg.model.state_dim = parse_int(key, value);
  else if (key == "expand") cfg.model.expand = parse_int(key, value);
  else if (key == "csi_dim") cfg.model.csi_dim = parse_int(key, value);
  else if (key == "patch_kernel") cfg.model.patch_kernel = parse_int(key, value);
  else if (key == "lr") cfg.train.lr = parse_double(key, value);
  else if (key == "batch_size") cfg.train.batch_size = parse_int(key, value);
  else if (key == "steps") cfg.train.steps = parse_int(key, value);
  else if (key == "seed") cfg.train.seed = parse_u64(key, value);
  else if (key == "channel") cfg.train.channel = parse_channel_kind(value);
  else if (key == "snr") cfg.train.snr_fixed = parse_double(key, value);
  else if (key == "snr_min") cfg.train.snr_min = parse_double(key, value);
  else if (key == "snr_max") cfg.train.snr_max = parse_double(key, value);
  else if (key == "crop") cfg.train.crop = parse_int(key, value);
  else if (key == "snrs") cfg.snrs = parse_snr_list(value);
  else if (key == "data") cfg.data = value;
  else if (key == "synthetic_count") cfg.synthetic_count = parse_int(key, value);
  else if (key == "out") cfg.out_dir = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else {
    throw std::invalid_argument("config error: unknown key '" + key + "'");
  }
}

AppConfig parse_config_file(const std::string& path, AppConfig base) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("config error: cannot open " + path);
  }
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config error: " + path + ":" +
                                  std::to_string(lineno) +
                                  " is not a key = value line");
    }
    apply_config_kv(base, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

std::string render_model_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "image_size = " << cfg.image_size << "\n";
  os << "channels = " << join_ints(cfg.channels) << "\n";
  os << "blocks = " << join_ints(cfg.blocks) << "\n";
  os << "cbr = " << cfg.cbr_num << "/" << cfg.cbr_den << "\n";
  os << "csi_mode = " << csi_mode_name(cfg.csi_mode) << "\n";
  os << "state_dim = " << cfg.state_dim << "\n";
  os << "expand = " << cfg.expand << "\n";
  os << "csi_dim = " << cfg.csi_dim << "\n";
  os << "patch_kernel = " << cfg.patch_kernel << "\n";
  return os.str();
}

ModelConfig parse_model_config_text(const std::string& text) {
  AppConfig tmp;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(t.substr(0, eq));
    // Manifests may carry extra bookkeeping keys; only model keys matter.
    try {
      apply_config_kv(tmp, key, trim(t.substr(eq + 1)));
    } catch (const std::invalid_argument&) {
      if (key == "image_size" || key == "channels" || key == "blocks" ||
          key == "cbr" || key == "csi_mode" || key == "state_dim" ||
          key == "expand" || key == "csi_dim" || key == "patch_kernel") {
        throw;
      }
    }
  }
  return tmp.model;
}

std::string render_config(const AppConfig& cfg) {
  std::ostringstream os;
  os << render_model_config(cfg.model);
  os << "lr = " << format_double(cfg.train.lr) << "\n";
  os << "batch_size = " << cfg.train.batch_size << "\n";
  os << "steps = " << cfg.train.steps << "\n";
  os << "seed = " << cfg.train.seed << "\n";
  os << "channel = " << channel_kind_name(cfg.train.channel) << "\n";
  os << "snr = " << format_double(cfg.train.snr_fixed) << "\n";
  os << "snr_min = " << format_double(cfg.train.snr_min) << "\n";
  os << "snr_max = " << format_double(cfg.train.snr_max) << "\n";
  os << "crop = " << cfg.train.crop << "\n";
  std::ostringstream snrs;
  for (std::size_t i = 0; i < cfg.snrs.size(); ++i) {
    if (i) snrs << ",";
    snrs << format_snr(cfg.snrs[i]);
  }
  os << "snrs = " << snrs.str() << "\n";
  os << "data = " << cfg.data << "\n";
  os << "synthetic_count = " << cfg.synthetic_count << "\n";
  os << "out = " << cfg.out_dir << "\n";
  if (!cfg.checkpoint.empty()) os << "checkpoint = " << cfg.checkpoint << "\n";
  return os.str();
}

}  // namespace vjscc
