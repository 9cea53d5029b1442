#include "rflow/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rflow/csv.hpp"

namespace rflow {

namespace {

constexpr const char* kMagic = "rflow-field";

const char* component_names(int rank) {
  switch (rank) {
  case 0: return "1";
  case 1: return "1 2 3";
  default: return "11 12 13 22 23 33";
  }
}

int component_count(int rank) { return rank == 0 ? 1 : rank == 1 ? 3 : 6; }

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
  return r;
}

template <int N>
void write_any(const std::filesystem::path& path, const Field<N>& u, int rank) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path.string() + " for writing");
  const auto& c = u.chart();
  os << kMagic << " 1\n"
     << "resolution " << c.resolution(0) << ' ' << c.resolution(1) << ' ' << c.resolution(2) << '\n'
     << "period " << format_number(c.period(0)) << ' ' << format_number(c.period(1)) << ' '
     << format_number(c.period(2)) << '\n'
     << "stencil_order " << c.stencil_order() << '\n'
     << "rank " << rank << '\n'
     << "components " << component_names(rank) << '\n'
     << "end\n";
  std::vector<std::uint64_t> buf(c.node_count() * N);
  for (std::size_t i = 0; i < c.node_count(); ++i)
    for (int k = 0; k < N; ++k) buf[i * N + k] = to_little(std::bit_cast<std::uint64_t>(u.at(k, i)));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  if (!os) throw ValidationError("write failed for " + path.string());
}

template <int N>
Field<N> read_any(const std::filesystem::path& path, int rank) {
  const auto f = read_field_file(path);
  if (f.rank != rank)
    throw ValidationError(path.string() + " holds a rank " + std::to_string(f.rank) + " field, expected rank " +
                          std::to_string(rank));
  Field<N> out(f.chart);
  for (std::size_t i = 0; i < f.chart.node_count(); ++i)
    for (int k = 0; k < N; ++k) out.at(k, i) = f.data[i * N + k];
  return out;
}

} // namespace

void write_field(const std::filesystem::path& path, const ScalarField& u) { write_any(path, u, 0); }
void write_field(const std::filesystem::path& path, const CovectorField& u) { write_any(path, u, 1); }
void write_field(const std::filesystem::path& path, const SymTensorField& u) { write_any(path, u, 2); }

FieldFile read_field_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path.string());
  auto bad = [&](const std::string& why) { return ValidationError(path.string() + ": " + why); };

  std::array<int, 3> n{};
  std::array<double, 3> period{};
  int order = 0, rank = -1;
  bool seen_components = false;
  std::string line;
  if (!std::getline(is, line) || line != std::string(kMagic) + " 1") throw bad("not a field snapshot");
  while (true) {
    if (!std::getline(is, line)) throw bad("header ends before 'end'");
    if (line == "end") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "resolution") ls >> n[0] >> n[1] >> n[2];
    else if (key == "period") ls >> period[0] >> period[1] >> period[2];
    else if (key == "stencil_order") ls >> order;
    else if (key == "rank") ls >> rank;
    else if (key == "components") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      if (rank < 0 || rest != component_names(rank)) throw bad("unsupported component ordering '" + rest + "'");
      seen_components = true;
      continue;
    } else
      throw bad("unknown header key '" + key + "'");
    if (!ls) throw bad("malformed header line '" + line + "'");
  }
  if (rank < 0 || rank > 2 || !seen_components) throw bad("header lacks rank or components");

  FieldFile out{GridChart(n, period, order), rank, {}};
  const std::size_t count = out.chart.node_count() * component_count(rank);
  std::vector<std::uint64_t> buf(count);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * 8));
  if (static_cast<std::size_t>(is.gcount()) != count * 8) throw bad("data block is shorter than the header says");
  if (is.peek() != std::ifstream::traits_type::eof()) throw bad("trailing bytes after the data block");
  out.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.data[i] = std::bit_cast<double>(to_little(buf[i]));
  return out;
}

ScalarField read_scalar_field(const std::filesystem::path& path) { return read_any<1>(path, 0); }
CovectorField read_covector_field(const std::filesystem::path& path) { return read_any<3>(path, 1); }
SymTensorField read_sym_tensor_field(const std::filesystem::path& path) { return read_any<6>(path, 2); }

} // namespace rflow
