#include <filesystem>
#include <fstream>
#include <sstream>

#include "srlp/binary_io.hpp"
#include "srlp/nn.hpp"

namespace srlp {

namespace io {

std::string checksummed(const std::string& payload) {
  std::string bytes = payload;
  put<std::uint64_t>(bytes, fnv1a(payload));
  return bytes;
}

void write_checksummed_file(const std::string& path, const std::string& payload) {
  write_file_atomic(path, checksummed(payload));
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_checksummed_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  if (bytes.size() < sizeof(std::uint64_t)) throw FormatError("'" + path + "' is truncated");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  Reader tail(bytes, body);
  const auto stored = tail.get<std::uint64_t>();
  bytes.resize(body);
  if (stored != fnv1a(bytes)) throw FormatError("'" + path + "' failed checksum verification");
  return bytes;
}

}  // namespace io

namespace nn {

namespace {
constexpr std::string_view kNetMagic = "SRLPNET1";
constexpr std::uint32_t kMaxLayerWidth = 1u << 20;
}  // namespace

void write_network(std::string& out, const Network& net) {
  io::put_bytes(out, kNetMagic);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& layer : net.layers()) {
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.input_size()));
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.output_size()));
    io::put<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) io::put<double>(out, layer.weights.data()[i]);
    for (Eigen::Index i = 0; i < layer.biases.size(); ++i) io::put<double>(out, layer.biases[i]);
  }
}

Network read_network(std::string_view bytes, std::size_t& offset) {
  io::Reader r(bytes, offset);
  r.expect_magic(kNetMagic);
  const auto count = r.get<std::uint32_t>();
  if (count == 0 || count > 1024) throw FormatError("implausible layer count " + std::to_string(count));
  std::vector<DenseLayer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto in = r.get<std::uint32_t>();
    const auto out = r.get<std::uint32_t>();
    const auto act = r.get<std::uint8_t>();
    if (in == 0 || out == 0 || in > kMaxLayerWidth || out > kMaxLayerWidth)
      throw FormatError("layer " + std::to_string(k) + " has implausible shape");
    if (act > static_cast<std::uint8_t>(Activation::relu))
      throw FormatError("layer " + std::to_string(k) + " has unknown activation tag");
    if (r.remaining() < (static_cast<std::size_t>(in) * out + out) * sizeof(double))
      throw FormatError("unexpected end of data in layer " + std::to_string(k));
    DenseLayer layer;
    layer.activation = static_cast<Activation>(act);
    layer.weights.resize(out, in);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = r.get<double>();
    layer.biases.resize(out);
    for (Eigen::Index i = 0; i < layer.biases.size(); ++i) layer.biases[i] = r.get<double>();
    if (!layer.weights.allFinite() || !layer.biases.allFinite())
      throw FormatError("layer " + std::to_string(k) + " holds non-finite parameters");
    layers.push_back(std::move(layer));
  }
  offset = r.offset();
  try {
    return Network(std::move(layers));
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("inconsistent network block: ") + e.what());
  }
}

std::string network_file_bytes(const Network& net) {
  std::string payload;
  write_network(payload, net);
  return io::checksummed(payload);
}

void save_network(const std::string& path, const Network& net) { io::write_file_atomic(path, network_file_bytes(net)); }

Network load_network(const std::string& path) {
  const std::string bytes = io::read_checksummed_file(path);
  std::size_t offset = 0;
  Network net = read_network(bytes, offset);
  if (offset != bytes.size()) throw FormatError("'" + path + "' has trailing bytes after the network block");
  return net;
}

}  // namespace nn
}  // namespace srlp
