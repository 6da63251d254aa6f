#include "heatpinn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "heatpinn/errors.hpp"

namespace heatpinn {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'H', 'P', 'I', 'N', 'N', 'C', 'K', '1'};
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

json spec_to_json(const NetworkSpec& s) {
  json labels = json::array();
  for (auto l : s.input_labels) labels.push_back(std::string(to_string(l)));
  return {{"architecture", std::string(to_string(s.architecture))},
          {"input_labels", labels},
          {"hidden_layers", s.hidden_layers},
          {"nodes_per_layer", s.nodes_per_layer},
          {"engineered_feature_count", s.engineered_feature_count},
          {"activation", std::string(to_string(s.activation))}};
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("checkpoint header: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("checkpoint header: bad type for field '") + key + "'");
  }
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  try {
    s.architecture = parse_architecture(field<std::string>(j, "architecture"));
    s.input_labels.clear();
    for (const auto& l : field<std::vector<std::string>>(j, "input_labels")) {
      s.input_labels.push_back(parse_input_label(l));
    }
    s.activation = parse_activation(field<std::string>(j, "activation"));
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint header: spec: ") + e.what());
  }
  s.hidden_layers = field<int>(j, "hidden_layers");
  s.nodes_per_layer = field<int>(j, "nodes_per_layer");
  s.engineered_feature_count = field<int>(j, "engineered_feature_count");
  return s;
}

void put_doubles(std::string& out, const std::vector<double>& v) {
  const auto* p = reinterpret_cast<const char*>(v.data());
  out.append(p, p + v.size() * sizeof(double));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& st = ckpt.state;
  json layout = json::array();
  for (const auto& s : st.params.layout()) {
    layout.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  const std::size_t terms = st.term_names.size();
  const std::size_t row_width = 2 + 2 * terms;  // epoch, losses, lambdas, composite
  json header = {
      {"format", "heatpinn-checkpoint"},
      {"version", kFormatVersion},
      {"dimensionality", ckpt.dimensionality},
      {"spec", spec_to_json(st.spec)},
      {"layout", layout},
      {"param_count", st.params.size()},
      {"scaling",
       {{"length_ref", ckpt.scaling.length_ref},
        {"length_ref_y", ckpt.scaling.length_ref_y},
        {"time_ref", ckpt.scaling.time_ref},
        {"temp_ref", ckpt.scaling.temp_ref},
        {"h_ref", ckpt.scaling.h_ref}}},
      {"optimizer",
       {{"step_count", st.adam.step_count},
        {"beta1", st.adam.beta1},
        {"beta2", st.adam.beta2},
        {"epsilon", st.adam.epsilon}}},
      {"lambdas", st.lambdas},
      {"term_names", st.term_names},
      {"epochs_completed", st.epochs_completed},
      {"clamp_hits", st.clamp_hits},
      {"history_rows", st.history.size()},
      {"history_row_width", row_width},
  };
  const std::string text = header.dump();
  std::string out(kMagic, kMagic + 8);
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += text;
  put_doubles(out, {st.params.values().begin(), st.params.values().end()});
  if (st.adam.first_moment.size() != st.params.size() ||
      st.adam.second_moment.size() != st.params.size()) {
    throw ContractError("save_checkpoint: optimizer state does not match parameters");
  }
  put_doubles(out, st.adam.first_moment);
  put_doubles(out, st.adam.second_moment);
  std::vector<double> rows;
  rows.reserve(st.history.size() * row_width);
  for (const auto& r : st.history) {
    if (r.losses.size() != terms || r.lambdas.size() != terms) {
      throw ContractError("save_checkpoint: history row width differs from term count");
    }
    rows.push_back(static_cast<double>(r.epoch));
    rows.insert(rows.end(), r.losses.begin(), r.losses.end());
    rows.insert(rows.end(), r.lambdas.begin(), r.lambdas.end());
    rows.push_back(r.composite);
  }
  put_doubles(out, rows);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError("checkpoint: bad magic (field 'magic')");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, sizeof len);
  if (len > bytes.size() - 16) throw FormatError("checkpoint: truncated header (field 'header_length')");
  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: corrupt JSON header: ") + e.what());
  }
  if (field<std::string>(header, "format") != "heatpinn-checkpoint") {
    throw FormatError("checkpoint header: unexpected field 'format'");
  }
  if (field<int>(header, "version") != kFormatVersion) {
    throw FormatError("checkpoint header: unsupported field 'version'");
  }
  Checkpoint ck;
  auto& st = ck.state;
  ck.dimensionality = field<int>(header, "dimensionality");
  st.spec = spec_from_json(field<json>(header, "spec"));

  std::vector<ParamSlot> layout;
  for (const auto& s : field<json>(header, "layout")) {
    layout.push_back({field<std::string>(s, "name"), field<std::size_t>(s, "offset"),
                      field<std::size_t>(s, "rows"), field<std::size_t>(s, "cols")});
  }
  const auto n = field<std::size_t>(header, "param_count");
  if (layout != build_layout(st.spec)) {
    throw FormatError("checkpoint header: field 'layout' does not match field 'spec'");
  }
  const auto scaling = field<json>(header, "scaling");
  ck.scaling.length_ref = field<double>(scaling, "length_ref");
  ck.scaling.length_ref_y = field<double>(scaling, "length_ref_y");
  ck.scaling.time_ref = field<double>(scaling, "time_ref");
  ck.scaling.temp_ref = field<double>(scaling, "temp_ref");
  ck.scaling.h_ref = field<double>(scaling, "h_ref");
  const auto opt = field<json>(header, "optimizer");
  st.adam.step_count = field<std::int64_t>(opt, "step_count");
  st.adam.beta1 = field<double>(opt, "beta1");
  st.adam.beta2 = field<double>(opt, "beta2");
  st.adam.epsilon = field<double>(opt, "epsilon");
  st.lambdas = field<std::vector<double>>(header, "lambdas");
  st.term_names = field<std::vector<std::string>>(header, "term_names");
  st.epochs_completed = field<std::int64_t>(header, "epochs_completed");
  st.clamp_hits = field<std::size_t>(header, "clamp_hits");
  const auto rows = field<std::size_t>(header, "history_rows");
  const auto width = field<std::size_t>(header, "history_row_width");
  const std::size_t terms = st.term_names.size();
  if (width != 2 + 2 * terms) throw FormatError("checkpoint header: bad field 'history_row_width'");
  if (st.lambdas.size() != terms) throw FormatError("checkpoint header: bad field 'lambdas'");

  const std::size_t expected_doubles = 3 * n + rows * width;
  const std::size_t payload = bytes.size() - 16 - len;
  if (payload != expected_doubles * sizeof(double)) {
    throw FormatError("checkpoint: payload is " + std::to_string(payload) + " bytes but fields " +
                      "'param_count'/'history_rows' require " +
                      std::to_string(expected_doubles * sizeof(double)));
  }
  const char* p = bytes.data() + 16 + len;
  auto take = [&](std::size_t count) {
    std::vector<double> v(count);
    std::memcpy(v.data(), p, count * sizeof(double));
    p += count * sizeof(double);
    return v;
  };
  try {
    st.params = ParamStore(std::move(layout), take(n));
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: field 'param_count': ") + e.what());
  }
  st.adam.first_moment = take(n);
  st.adam.second_moment = take(n);
  const auto flat = take(rows * width);
  st.history.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = flat.data() + r * width;
    HistoryRow h;
    h.epoch = static_cast<std::int64_t>(row[0]);
    h.losses.assign(row + 1, row + 1 + terms);
    h.lambdas.assign(row + 1 + terms, row + 1 + 2 * terms);
    h.composite = row[width - 1];
    st.history.push_back(std::move(h));
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::ios_base::failure("cannot open " + tmp + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::ios_base::failure("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::ios_base::failure("cannot move checkpoint into place: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace heatpinn
