#include "bayesic/hash.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bayesic/errors.hpp"

namespace bayesic {

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for hashing");
  std::ostringstream buf;
  buf << in.rdbuf();
  return "fnv1a64:" + fnv1a64_hex(buf.str());
}

}  // namespace bayesic
