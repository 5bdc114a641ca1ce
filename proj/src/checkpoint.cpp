#include "deceptlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "deceptlab/config_json.hpp"

namespace deceptlab {

namespace {

constexpr char kMagic[4] = {'D', 'L', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError(std::string("checkpoint: truncated while reading ") + what);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const data::Vocabulary& vocab, const nlohmann::json& extra) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint: " + path);

  nlohmann::json meta;
  meta["config"] = model_config_to_json(model.config());
  meta["vocab"] = vocab.id_to_token;
  if (!extra.is_null()) meta["extra"] = extra;
  const std::string meta_str = meta.dump();

  os.write(kMagic, 4);
  write_raw<std::uint32_t>(os, kVersion);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(meta_str.size()));
  os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  const auto named = model.named_parameters();
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, tensor] : named) {
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(tensor->rows()));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(tensor->cols()));
  }
  for (const auto& [name, tensor] : named)
    os.write(reinterpret_cast<const char*>(tensor->data.data()),
             static_cast<std::streamsize>(tensor->data.size() * sizeof(double)));
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("checkpoint: bad magic bytes");
  const auto version = read_raw<std::uint32_t>(is, "version");
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  const auto meta_len = read_raw<std::uint32_t>(is, "metadata length");
  std::string meta_str(meta_len, '\0');
  is.read(meta_str.data(), meta_len);
  if (!is) throw ParseError("checkpoint: truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_str);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: invalid metadata: ") + e.what());
  }

  LoadedCheckpoint out;
  const auto cfg = experiment_config_from_json(meta.at("config")).model;
  out.model = Model::build(cfg, /*seed=*/0);
  out.vocab.id_to_token = meta.at("vocab").get<std::vector<std::string>>();
  for (int i = 0; i < out.vocab.size(); ++i)
    out.vocab.token_to_id[out.vocab.id_to_token[static_cast<std::size_t>(i)]] = i;
  if (meta.contains("extra")) out.extra = meta["extra"];

  auto named = out.model.named_parameters();
  std::map<std::string, TensorPtr> by_name(named.begin(), named.end());

  const auto n_entries = read_raw<std::uint32_t>(is, "entry count");
  if (n_entries != named.size())
    throw ConfigError("checkpoint: holds " + std::to_string(n_entries) +
                      " parameters, model wants " + std::to_string(named.size()));
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
  };
  std::vector<Entry> entries;
  entries.reserve(n_entries);
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    Entry e;
    const auto name_len = read_raw<std::uint32_t>(is, "name length");
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    if (!is) throw ParseError("checkpoint: truncated parameter name");
    e.rows = read_raw<std::uint32_t>(is, "rows");
    e.cols = read_raw<std::uint32_t>(is, "cols");
    auto it = by_name.find(e.name);
    if (it == by_name.end())
      throw ConfigError("checkpoint: unknown parameter '" + e.name + "'");
    if (it->second->rows() != e.rows || it->second->cols() != e.cols)
      throw ConfigError("checkpoint: parameter '" + e.name + "' has shape " +
                        std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                        ", model wants " + shape_str(*it->second));
    entries.push_back(std::move(e));
  }
  for (const auto& e : entries) {
    auto& tensor = by_name[e.name];
    is.read(reinterpret_cast<char*>(tensor->data.data()),
            static_cast<std::streamsize>(tensor->data.size() * sizeof(double)));
    if (!is) throw ParseError("checkpoint: truncated data for '" + e.name + "'");
  }
  return out;
}

}  // namespace deceptlab
