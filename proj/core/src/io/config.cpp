#include "cdpauth/io/config.hpp"

#include <cstdio>
#include <set>

#include <json.hpp>

#include "cdpauth/error.hpp"
#include "cdpauth/io/files.hpp"

namespace cdpauth::io {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw FormatError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed scalar conversions with path-aware diagnostics.
double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::size_t as_size(const json& j, const std::string& path) {
  return static_cast<std::size_t>(as_u64(j, path));
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

std::vector<double> as_doubles(const json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i)
    out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename T, std::size_t N, typename Conv>
std::array<T, N> as_fixed(const json& j, const std::string& path, Conv conv) {
  if (as_array(j, path).size() != N)
    fail(path, "expected " + std::to_string(N) + " elements");
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = conv(j[i], path + "[" + std::to_string(i) + "]");
  return out;
}

template <typename E, typename Parse>
E as_enum(const json& j, const std::string& path, Parse parse) {
  const std::string text = as_string(j, path);
  const auto v = parse(text);
  if (!v) fail(path, "unknown value '" + text + "'");
  return *v;
}

// Walks one JSON object; every key must be consumed before finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <typename Fn>
  void opt(const std::string& key, Fn&& fn) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) {
      const std::string child = join(path_, key);
      fn(*it, child);
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail(join(path_, key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---- writers ----

json to_json(const nn::AdamOptions& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

json to_json(const PrintModel& p) {
  return {{"ink_reflectance", p.ink_reflectance},
          {"paper_reflectance", p.paper_reflectance},
          {"dot_gain", p.dot_gain},
          {"psf_sigma", p.psf_sigma},
          {"noise_sigma", p.noise_sigma}};
}

json to_json(const ChannelConfig& c) {
  json attacks = json::object();
  for (const auto& a : c.attacks) {
    attacks[std::string(to_string(a.preset))] = {
        {"estimation_threshold", a.estimation_threshold}, {"reprint", to_json(a.reprint)}};
  }
  return {{"original_print", to_json(c.original_print)},
          {"acquisition",
           {{"scale_factor", c.acquisition.scale_factor},
            {"sensor_gamma", c.acquisition.sensor_gamma},
            {"sensor_noise_sigma", c.acquisition.sensor_noise_sigma},
            {"channel_gains", c.acquisition.channel_gains}}},
          {"attacks", attacks}};
}

json to_json(const RunConfig& c) {
  json sup_setups = json::array();
  for (auto s : c.supervised.setups) sup_setups.push_back(std::string(to_string(s)));
  const auto& sh = c.supervised.hyper;
  json oc_setups = json::array();
  for (auto s : c.oneclass.setups) oc_setups.push_back(setup_number(s));
  json grid = json::array();
  for (const auto& p : c.oneclass.grid) grid.push_back({{"nu", p.nu}, {"gamma", p.gamma}});
  const auto& eh = c.oneclass.hyper;
  const auto& d = c.dataset;
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"runs", c.runs},
      {"pipeline", std::string(to_string(c.pipeline))},
      {"dataset",
       {{"templates", d.templates},
        {"split_fractions", d.split_fractions},
        {"geometry",
         {{"size", d.geometry.size},
          {"symbol_size", d.geometry.symbol_size},
          {"black_fraction", d.geometry.black_fraction}}},
        {"channel", to_json(d.channel)}}},
      {"supervised",
       {{"setups", sup_setups},
        {"adam", to_json(sh.adam)},
        {"batch_size", sh.batch_size},
        {"epochs", sh.epochs},
        {"patience", sh.patience},
        {"steps_per_epoch", sh.steps_per_epoch},
        {"gammas", sh.gammas},
        {"rotations", sh.rotations},
        {"widths", sh.widths}}},
      {"oneclass",
       {{"setups", oc_setups},
        {"beta", c.oneclass.beta},
        {"statistic", std::string(to_string(c.oneclass.statistic))},
        {"kernel", std::string(to_string(c.oneclass.kernel))},
        {"standardize", c.oneclass.standardize},
        {"grid", grid},
        {"fit_rotations", c.oneclass.fit_rotations},
        {"fit_gammas", c.oneclass.fit_gammas},
        {"extractor",
         {{"adam", to_json(eh.adam)},
          {"batch_size", eh.batch_size},
          {"epochs", eh.epochs},
          {"patience", eh.patience},
          {"steps_per_epoch", eh.steps_per_epoch},
          {"gammas", eh.gammas},
          {"rotations", eh.rotations},
          {"base_width", eh.base_width},
          {"discriminator_width", eh.discriminator_width},
          {"adversarial_weight", eh.adversarial_weight}}}}}};
}

// ---- readers ----

void read(const json& j, const std::string& path, nn::AdamOptions& a) {
  Section s(j, path);
  s.opt("lr", [&](auto& v, auto& p) { a.lr = as_double(v, p); });
  s.opt("beta1", [&](auto& v, auto& p) { a.beta1 = as_double(v, p); });
  s.opt("beta2", [&](auto& v, auto& p) { a.beta2 = as_double(v, p); });
  s.opt("epsilon", [&](auto& v, auto& p) { a.epsilon = as_double(v, p); });
  s.finish();
}

void read(const json& j, const std::string& path, PrintModel& m) {
  Section s(j, path);
  s.opt("ink_reflectance", [&](auto& v, auto& p) { m.ink_reflectance = as_double(v, p); });
  s.opt("paper_reflectance", [&](auto& v, auto& p) { m.paper_reflectance = as_double(v, p); });
  s.opt("dot_gain", [&](auto& v, auto& p) { m.dot_gain = as_double(v, p); });
  s.opt("psf_sigma", [&](auto& v, auto& p) { m.psf_sigma = as_double(v, p); });
  s.opt("noise_sigma", [&](auto& v, auto& p) { m.noise_sigma = as_double(v, p); });
  s.finish();
}

void read(const json& j, const std::string& path, ChannelConfig& c) {
  Section s(j, path);
  s.opt("original_print", [&](auto& v, auto& p) { read(v, p, c.original_print); });
  s.opt("acquisition", [&](auto& v, auto& p) {
    Section a(v, p);
    auto& m = c.acquisition;
    a.opt("scale_factor", [&](auto& x, auto& q) { m.scale_factor = as_double(x, q); });
    a.opt("sensor_gamma", [&](auto& x, auto& q) { m.sensor_gamma = as_double(x, q); });
    a.opt("sensor_noise_sigma",
          [&](auto& x, auto& q) { m.sensor_noise_sigma = as_double(x, q); });
    a.opt("channel_gains", [&](auto& x, auto& q) { m.channel_gains = as_doubles(x, q); });
    a.finish();
  });
  s.opt("attacks", [&](auto& v, auto& p) {
    Section a(v, p);
    for (auto& attack : c.attacks) {
      a.opt(std::string(to_string(attack.preset)), [&](auto& x, auto& q) {
        Section one(x, q);
        one.opt("estimation_threshold",
                [&](auto& y, auto& r) { attack.estimation_threshold = as_double(y, r); });
        one.opt("reprint", [&](auto& y, auto& r) { read(y, r, attack.reprint); });
        one.finish();
      });
    }
    a.finish();
  });
  s.finish();
}

void read(const json& j, const std::string& path, SyntheticConfig& d) {
  Section s(j, path);
  s.opt("templates", [&](auto& v, auto& p) { d.templates = as_size(v, p); });
  s.opt("split_fractions",
        [&](auto& v, auto& p) { d.split_fractions = as_fixed<double, 3>(v, p, as_double); });
  s.opt("geometry", [&](auto& v, auto& p) {
    Section g(v, p);
    g.opt("size", [&](auto& x, auto& q) { d.geometry.size = as_size(x, q); });
    g.opt("symbol_size", [&](auto& x, auto& q) { d.geometry.symbol_size = as_size(x, q); });
    g.opt("black_fraction",
          [&](auto& x, auto& q) { d.geometry.black_fraction = as_double(x, q); });
    g.finish();
  });
  s.opt("channel", [&](auto& v, auto& p) { read(v, p, d.channel); });
  s.finish();
}

void read(const json& j, const std::string& path, SupervisedConfig& c) {
  Section s(j, path);
  auto& h = c.hyper;
  s.opt("setups", [&](auto& v, auto& p) {
    c.setups.clear();
    for (std::size_t i = 0; i < as_array(v, p).size(); ++i)
      c.setups.push_back(as_enum<SupervisedSetup>(v[i], p + "[" + std::to_string(i) + "]",
                                                  parse_supervised_setup));
  });
  s.opt("adam", [&](auto& v, auto& p) { read(v, p, h.adam); });
  s.opt("batch_size", [&](auto& v, auto& p) { h.batch_size = as_size(v, p); });
  s.opt("epochs", [&](auto& v, auto& p) { h.epochs = as_size(v, p); });
  s.opt("patience", [&](auto& v, auto& p) { h.patience = as_size(v, p); });
  s.opt("steps_per_epoch", [&](auto& v, auto& p) { h.steps_per_epoch = as_size(v, p); });
  s.opt("gammas", [&](auto& v, auto& p) { h.gammas = as_doubles(v, p); });
  s.opt("rotations", [&](auto& v, auto& p) { h.rotations = as_bool(v, p); });
  s.opt("widths",
        [&](auto& v, auto& p) { h.widths = as_fixed<std::size_t, 3>(v, p, as_size); });
  s.finish();
}

void read(const json& j, const std::string& path, OneClassConfig& c) {
  Section s(j, path);
  s.opt("setups", [&](auto& v, auto& p) {
    c.setups.clear();
    for (std::size_t i = 0; i < as_array(v, p).size(); ++i) {
      const std::string q = p + "[" + std::to_string(i) + "]";
      if (!v[i].is_number_integer()) fail(q, "expected a setup number 1-5");
      const auto setup = feature_setup_from_number(v[i].template get<int>());
      if (!setup) fail(q, "expected a setup number 1-5");
      c.setups.push_back(*setup);
    }
  });
  s.opt("beta", [&](auto& v, auto& p) { c.beta = as_double(v, p); });
  s.opt("statistic", [&](auto& v, auto& p) {
    c.statistic = as_enum<DiscriminatorStatistic>(v, p, parse_discriminator_statistic);
  });
  s.opt("kernel",
        [&](auto& v, auto& p) { c.kernel = as_enum<KernelType>(v, p, parse_kernel_type); });
  s.opt("standardize", [&](auto& v, auto& p) { c.standardize = as_bool(v, p); });
  s.opt("grid", [&](auto& v, auto& p) {
    c.grid.clear();
    for (std::size_t i = 0; i < as_array(v, p).size(); ++i) {
      Section g(v[i], p + "[" + std::to_string(i) + "]");
      GridPoint point;
      g.opt("nu", [&](auto& x, auto& q) { point.nu = as_double(x, q); });
      g.opt("gamma", [&](auto& x, auto& q) { point.gamma = as_double(x, q); });
      g.finish();
      c.grid.push_back(point);
    }
  });
  s.opt("fit_rotations", [&](auto& v, auto& p) { c.fit_rotations = as_bool(v, p); });
  s.opt("fit_gammas", [&](auto& v, auto& p) { c.fit_gammas = as_doubles(v, p); });
  s.opt("extractor", [&](auto& v, auto& p) {
    Section e(v, p);
    auto& h = c.hyper;
    e.opt("adam", [&](auto& x, auto& q) { read(x, q, h.adam); });
    e.opt("batch_size", [&](auto& x, auto& q) { h.batch_size = as_size(x, q); });
    e.opt("epochs", [&](auto& x, auto& q) { h.epochs = as_size(x, q); });
    e.opt("patience", [&](auto& x, auto& q) { h.patience = as_size(x, q); });
    e.opt("steps_per_epoch", [&](auto& x, auto& q) { h.steps_per_epoch = as_size(x, q); });
    e.opt("gammas", [&](auto& x, auto& q) { h.gammas = as_doubles(x, q); });
    e.opt("rotations", [&](auto& x, auto& q) { h.rotations = as_bool(x, q); });
    e.opt("base_width", [&](auto& x, auto& q) { h.base_width = as_size(x, q); });
    e.opt("discriminator_width",
          [&](auto& x, auto& q) { h.discriminator_width = as_size(x, q); });
    e.opt("adversarial_weight",
          [&](auto& x, auto& q) { h.adversarial_weight = as_double(x, q); });
    e.finish();
  });
  s.finish();
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(source) + ": " + e.what());
  }
  RunConfig c;
  try {
    Section s(j, "");
    s.opt("seed", [&](auto& v, auto& p) { c.seed = as_u64(v, p); });
    s.opt("output_dir", [&](auto& v, auto& p) { c.output_dir = as_string(v, p); });
    s.opt("runs", [&](auto& v, auto& p) { c.runs = as_size(v, p); });
    s.opt("pipeline", [&](auto& v, auto& p) {
      c.pipeline = as_enum<PipelineKind>(v, p, parse_pipeline_kind);
    });
    s.opt("dataset", [&](auto& v, auto& p) { read(v, p, c.dataset); });
    s.opt("supervised", [&](auto& v, auto& p) { read(v, p, c.supervised); });
    s.opt("oneclass", [&](auto& v, auto& p) { read(v, p, c.oneclass); });
    s.finish();
  } catch (const FormatError& e) {
    throw FormatError(std::string(source) + ": " + e.what());
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string(source) + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  return parse_config(text, path.string());
}

std::string dump_config(const RunConfig& config) {
  return to_json(config).dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  const std::string canonical = dump_config(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cdpauth::io
