#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nfc/correlation.hpp"
#include "nfc/linalg.hpp"

namespace nfc::io {

inline constexpr int kFormatVersion = 1;

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string &s);

// "# format_version=1,provenance=..." then the dimension, then one row per line
// with interleaved real,imag values.
void write_matrix_csv(std::ostream &os, const CorrelationMatrix &R);
CorrelationMatrix read_matrix_csv(std::istream &is);
void write_matrix_csv(const std::string &path, const CorrelationMatrix &R);
CorrelationMatrix read_matrix_csv(const std::string &path);

// Little-endian: u64 dim, then 2*dim*dim f64 values row-major, real/imag interleaved.
void write_matrix_binary(std::ostream &os, const CMatrix &R);
CMatrix read_matrix_binary(std::istream &is);
void write_matrix_binary(const std::string &path, const CMatrix &R);
CorrelationMatrix read_matrix_binary(const std::string &path);

// Picks the reader from the file extension (.bin for binary, anything else CSV).
CorrelationMatrix read_matrix(const std::string &path);

// One "re,im" row per entry after a comment line carrying seed and source hash.
void write_vector_csv(std::ostream &os, const CVector &v, std::uint64_t seed,
                      std::uint64_t source_hash);
CVector read_vector_csv(std::istream &is);

void write_real_vector_csv(std::ostream &os, const std::string &header, const RVector &v);

}  // namespace nfc::io
