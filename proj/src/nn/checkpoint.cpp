#include "kanae/nn/checkpoint.hpp"

#include "kanae/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kanae::nn {

namespace {

void put_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

nlohmann::json tensor_entry(const std::string& name, const char* kind, const Tensor& t,
                            std::size_t& offset) {
  const std::size_t nbytes = t.size() * sizeof(double);
  nlohmann::json entry = {{"name", name}, {"kind", kind},     {"shape", t.shape()},
                          {"offset", offset}, {"nbytes", nbytes}};
  offset += nbytes;
  return entry;
}

struct RawHeader {
  nlohmann::json json;
  std::size_t payload_start;
};

RawHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path.string() + ": empty checkpoint");
  std::istringstream ls(line);
  std::string magic;
  long long length = -1;
  ls >> magic >> length;
  if (magic != kCheckpointMagic || length < 0)
    throw ParseError(path.string() + ": not a KANAE1 checkpoint (header '" + line + "')");
  std::string block(static_cast<std::size_t>(length), '\0');
  in.read(block.data(), length);
  if (in.gcount() != length)
    throw ParseError(path.string() + ": truncated JSON block");
  RawHeader h;
  try {
    h.json = nlohmann::json::parse(block);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad JSON block: " + e.what());
  }
  h.payload_start = line.size() + 1 + static_cast<std::size_t>(length);
  return h;
}

} // namespace

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& metadata,
                      const std::vector<ParamRef>& parameters, const std::vector<BufferRef>& buffers) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& p : parameters)
    tensors.push_back(tensor_entry(p.name, "parameter", p.param->value, offset));
  for (const auto& b : buffers)
    tensors.push_back(tensor_entry(b.name, "buffer", *b.value, offset));

  const nlohmann::json header = {{"format", kCheckpointMagic},
                                 {"dtype", "float64"},
                                 {"byte_order", "little"},
                                 {"metadata", metadata},
                                 {"tensors", tensors}};
  const std::string block = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << kCheckpointMagic << ' ' << block.size() << '\n' << block;
  for (const auto& p : parameters)
    for (double v : p.param->value.values())
      put_le(out, v);
  for (const auto& b : buffers)
    for (double v : b.value->values())
      put_le(out, v);
  if (!out)
    throw IoError("write failed for " + path.string());
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return parse_header(in, path).json;
}

CheckpointContents read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  RawHeader h = parse_header(in, path);
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  CheckpointContents contents;
  for (const auto& entry : h.json.at("tensors")) {
    const auto shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto nbytes = entry.at("nbytes").get<std::size_t>();
    if (nbytes != shape_numel(shape) * sizeof(double) || offset + nbytes > payload.size())
      throw ParseError(path.string() + ": tensor " + entry.at("name").get<std::string>() +
                       " exceeds the payload");
    std::vector<double> values(shape_numel(shape));
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] = get_le(payload.data() + offset + i * 8);
    contents.tensors.emplace(entry.at("name").get<std::string>(), Tensor(shape, std::move(values)));
  }
  contents.header = std::move(h.json);
  return contents;
}

void restore_checkpoint(const CheckpointContents& contents, const std::vector<ParamRef>& parameters,
                        const std::vector<BufferRef>& buffers) {
  auto assign = [&](const std::string& name, Tensor& target) {
    auto it = contents.tensors.find(name);
    if (it == contents.tensors.end())
      throw ParseError("checkpoint is missing tensor " + name);
    if (it->second.shape() != target.shape())
      throw DimensionError("checkpoint tensor " + name + " has shape " + shape_string(it->second.shape()) +
                           ", model expects " + shape_string(target.shape()));
    target = it->second;
  };
  for (const auto& p : parameters)
    assign(p.name, p.param->value);
  for (const auto& b : buffers)
    assign(b.name, *b.value);
}

} // namespace kanae::nn
