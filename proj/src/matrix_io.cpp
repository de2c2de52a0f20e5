#include "nfc/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nfc::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary matrix format assumes a little-endian host");

std::vector<std::string> split(const std::string &line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool next_data_line(std::istream &is, std::string &line)
{
    while (std::getline(is, line)) {
        line = trim(line);
        if (!line.empty() && line[0] != '#')
            return true;
    }
    return false;
}

std::ofstream open_out(const std::string &path, bool binary)
{
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    return os;
}

std::ifstream open_in(const std::string &path, bool binary)
{
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is)
        throw std::runtime_error("cannot open '" + path + "' for reading");
    return is;
}

}  // namespace

std::string format_double(double v)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string &s)
{
    const std::string t = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw std::invalid_argument("malformed number '" + t + "'");
    return v;
}

void write_matrix_csv(std::ostream &os, const CorrelationMatrix &R)
{
    const auto n = R.values.rows();
    os << "# format_version=" << kFormatVersion << ",provenance=" << to_string(R.provenance)
       << "\n";
    os << n << "\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j)
                os << ',';
            os << format_double(R.values(i, j).real()) << ','
               << format_double(R.values(i, j).imag());
        }
        os << "\n";
    }
}

CorrelationMatrix read_matrix_csv(std::istream &is)
{
    CorrelationMatrix out;
    out.provenance = Provenance::imported;
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("matrix CSV is empty");
    if (trim(line).rfind('#', 0) == 0) {
        const auto vpos = line.find("format_version=");
        if (vpos != std::string::npos &&
            trim(split(line.substr(vpos + 15), ',').front()) != std::to_string(kFormatVersion))
            throw std::invalid_argument("unsupported matrix CSV format version");
        const auto pos = line.find("provenance=");
        if (pos != std::string::npos) {
            const auto val = split(line.substr(pos + 11), ',').front();
            out.provenance = provenance_from_string(trim(val));
        }
        if (!next_data_line(is, line))
            throw std::invalid_argument("matrix CSV is missing the dimension line");
    }
    const double dimv = parse_double(line);
    if (dimv < 1 || dimv != static_cast<double>(static_cast<long long>(dimv)))
        throw std::invalid_argument("matrix CSV has an invalid dimension");
    const auto n = static_cast<Eigen::Index>(dimv);
    out.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!next_data_line(is, line))
            throw std::invalid_argument("matrix CSV has too few rows");
        const auto cells = split(line, ',');
        if (static_cast<Eigen::Index>(cells.size()) != 2 * n)
            throw std::invalid_argument("matrix CSV row " + std::to_string(i) +
                                        " has the wrong number of values");
        for (Eigen::Index j = 0; j < n; ++j)
            out.values(i, j) = {parse_double(cells[static_cast<std::size_t>(2 * j)]),
                                parse_double(cells[static_cast<std::size_t>(2 * j + 1)])};
    }
    return out;
}

void write_matrix_csv(const std::string &path, const CorrelationMatrix &R)
{
    auto os = open_out(path, false);
    write_matrix_csv(os, R);
}

CorrelationMatrix read_matrix_csv(const std::string &path)
{
    auto is = open_in(path, false);
    return read_matrix_csv(is);
}

void write_matrix_binary(std::ostream &os, const CMatrix &R)
{
    const std::uint64_t n = static_cast<std::uint64_t>(R.rows());
    os.write(reinterpret_cast<const char *>(&n), sizeof n);
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            const double re = R(i, j).real();
            const double im = R(i, j).imag();
            os.write(reinterpret_cast<const char *>(&re), sizeof re);
            os.write(reinterpret_cast<const char *>(&im), sizeof im);
        }
}

CMatrix read_matrix_binary(std::istream &is)
{
    std::uint64_t n = 0;
    if (!is.read(reinterpret_cast<char *>(&n), sizeof n) || n == 0 || n > (1u << 20))
        throw std::invalid_argument("binary matrix has an invalid header");
    const auto dim = static_cast<Eigen::Index>(n);
    CMatrix R(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            double re = 0.0, im = 0.0;
            is.read(reinterpret_cast<char *>(&re), sizeof re);
            is.read(reinterpret_cast<char *>(&im), sizeof im);
            if (!is)
                throw std::invalid_argument("binary matrix is truncated");
            R(i, j) = {re, im};
        }
    return R;
}

void write_matrix_binary(const std::string &path, const CMatrix &R)
{
    auto os = open_out(path, true);
    write_matrix_binary(os, R);
}

CorrelationMatrix read_matrix_binary(const std::string &path)
{
    auto is = open_in(path, true);
    return {read_matrix_binary(is), Provenance::imported};
}

CorrelationMatrix read_matrix(const std::string &path)
{
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0)
        return read_matrix_binary(path);
    return read_matrix_csv(path);
}

void write_vector_csv(std::ostream &os, const CVector &v, std::uint64_t seed,
                      std::uint64_t source_hash)
{
    os << "# format_version=" << kFormatVersion << ",seed=" << seed
       << ",source_hash=" << source_hash << "\n";
    os << "re,im\n";
    for (Eigen::Index i = 0; i < v.size(); ++i)
        os << format_double(v[i].real()) << ',' << format_double(v[i].imag()) << "\n";
}

CVector read_vector_csv(std::istream &is)
{
    std::vector<cdouble> vals;
    std::string line;
    while (next_data_line(is, line)) {
        if (line == "re,im")
            continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw std::invalid_argument("vector CSV rows must hold re,im");
        vals.emplace_back(parse_double(cells[0]), parse_double(cells[1]));
    }
    CVector v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

void write_real_vector_csv(std::ostream &os, const std::string &header, const RVector &v)
{
    os << "# format_version=" << kFormatVersion << "\n";
    os << "index," << header << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i)
        os << i << ',' << format_double(v[i]) << "\n";
}

}  // namespace nfc::io
