#include "unveil/ply.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace unveil {

void save_ply(const std::string& path, const std::vector<PointRecord>& points) {
  std::string tmp = path + ".tmp";
  std::ofstream out(tmp);
  if (!out) throw std::runtime_error("ply: cannot write " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property ushort label\nend_header\n";
  out.precision(9);
  for (const PointRecord& p : points) {
    auto q = [](double v) {
      return int(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    out << p.position.x() << " " << p.position.y() << " " << p.position.z()
        << " " << q(p.color.x()) << " " << q(p.color.y()) << " "
        << q(p.color.z()) << " " << p.label << "\n";
  }
  out.close();
  std::filesystem::rename(tmp, path);
}

std::vector<PointRecord> load_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ply: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw std::runtime_error("ply: bad magic in " + path);
  size_t count = 0;
  bool ascii = false;
  std::vector<std::string> properties;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = fmt == "ascii";
    } else if (word == "element") {
      std::string kind;
      ss >> kind >> count;
      if (kind != "vertex")
        throw std::runtime_error("ply: only vertex elements supported: " + path);
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      properties.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!ascii) throw std::runtime_error("ply: only ascii format supported: " + path);
  const std::vector<std::string> expected = {"x",     "y",    "z",    "red",
                                             "green", "blue", "label"};
  if (properties != expected)
    throw std::runtime_error("ply: unexpected property layout in " + path);

  std::vector<PointRecord> points;
  points.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    PointRecord p;
    int r, g, b, label;
    if (!(in >> p.position.x() >> p.position.y() >> p.position.z() >> r >> g >>
          b >> label))
      throw std::runtime_error("ply: truncated vertex data in " + path);
    p.color = Vec3(r / 255.0, g / 255.0, b / 255.0);
    if (label < 0 || label > 65535)
      throw std::runtime_error("ply: label out of range in " + path);
    p.label = uint16_t(label);
    points.push_back(p);
  }
  return points;
}

}  // namespace unveil
