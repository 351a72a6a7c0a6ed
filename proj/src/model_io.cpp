#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "disfl/neuralnet.hpp"

namespace disfl::nn {

namespace {

constexpr char kMagic[4] = {'D', 'F', 'L', 'T'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

}  // namespace

std::string serialize_model(const Model& model) {
  auto tensors = model.params.tensors();
  Json manifest = Json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    Json entry = Json::object();
    entry["name"] = t.name;
    entry["shape"] = {t.rows, t.cols};
    entry["offset"] = offset;
    manifest.push_back(std::move(entry));
    offset += static_cast<std::uint64_t>(t.rows * t.cols) * 4;
  }
  Json header = Json::object();
  header["hyperparams"] = model.hyper.to_json();
  header["vocabulary"] = {{"entries", model.vocab.entries()}, {"counts", model.vocab.counts()}};
  header["tensors"] = std::move(manifest);
  const std::string header_text = header.dump();

  std::string out(kMagic, 4);
  put_le(out, kModelFormatVersion, 4);
  put_le(out, header_text.size(), 8);
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& t : tensors)
    for (float v : t.values()) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  return out;
}

Model deserialize_model(std::string_view bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a model file (bad magic)");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kModelFormatVersion)
    throw DataError("unsupported model format version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  const std::uint64_t header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - 16) throw DataError("truncated model file (header)");

  Model model;
  std::size_t data_start = 16 + static_cast<std::size_t>(header_len);
  Json manifest;
  try {
    Json header = Json::parse(bytes.substr(16, static_cast<std::size_t>(header_len)));
    model.hyper = Hyperparams::from_json(header.at("hyperparams"));
    model.vocab = Vocabulary::from_entries(header.at("vocabulary").at("entries").get<std::vector<std::string>>(),
                                           header.at("vocabulary").at("counts").get<std::vector<std::int64_t>>());
    manifest = header.at("tensors");
  } catch (const Json::exception& e) {
    throw DataError(std::string("model header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model header: ") + e.what());
  }
  if (static_cast<std::size_t>(model.hyper.vocab_size) != model.vocab.size())
    throw DataError("model header: vocabulary size disagrees with hyperparameters");
  model.params = Parameters<float>::zeros(model.hyper);
  auto tensors = model.params.tensors();
  if (manifest.size() != tensors.size()) throw DataError("model manifest lists the wrong number of tensors");

  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const Json& entry = manifest[k];
    auto& t = tensors[k];
    if (entry.value("name", "") != t.name || entry.at("shape") != Json{t.rows, t.cols})
      throw DataError("tensor '" + t.name + "' shape or name mismatch against header");
    const std::size_t offset = data_start + entry.at("offset").get<std::size_t>();
    const std::size_t count = static_cast<std::size_t>(t.rows * t.cols);
    if (offset + count * 4 > bytes.size()) throw DataError("truncated model file (tensor " + t.name + ")");
    auto values = t.values();
    for (std::size_t i = 0; i < count; ++i)
      values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, offset + 4 * i, 4)));
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace disfl::nn
