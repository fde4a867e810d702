#include "stgraph/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace stgraph {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kMagic = "stgraph-checkpoint";

void write_matrix(std::ofstream& out, const std::string& key,
                  const Matrix& m) {
  out << "matrix " << key << " " << m.rows() << " " << m.cols() << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j == 0 ? "" : " ") << buf;
    }
    out << "\n";
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  const ModelConfig& c = ckpt.params.config;
  out << kMagic << " " << kFormatVersion << "\n";
  out << "config n_nodes " << c.n_nodes << "\n";
  out << "config m1 " << c.m1 << "\n";
  out << "config m2 " << c.m2 << "\n";
  out << "config f_in " << c.f_in << "\n";
  out << "config f_out " << c.f_out << "\n";
  out << "config hidden " << c.hidden << "\n";
  out << "config cheb_k " << c.cheb_k << "\n";
  out << "config t_in " << c.t_in << "\n";
  out << "config t_out " << c.t_out << "\n";
  out << "config assign_embed " << c.assign_embed << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", ckpt.scaler.mean);
  out << "scaler mean " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", ckpt.scaler.std_dev);
  out << "scaler std " << buf << "\n";
  for (const Param* p : ckpt.params.parameters())
    write_matrix(out, p->name, p->value);
  if (ckpt.params.pool0.assignment_ready) {
    write_matrix(out, "cache.assign0", ckpt.params.pool0.cached_assignment);
    write_matrix(out, "cache.assign1", ckpt.params.pool1.cached_assignment);
  }
  out << "end\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::string magic;
  int version = -1;
  if (!(in >> magic >> version) || magic != kMagic)
    throw ParseError(path + ": not a checkpoint file");
  if (version != kFormatVersion)
    throw ParseError(path + ": unsupported checkpoint version " +
                     std::to_string(version));

  ModelConfig cfg;
  Scaler scaler;
  std::map<std::string, Matrix> matrices;
  std::string kind;
  while (in >> kind) {
    if (kind == "end") break;
    if (kind == "config") {
      std::string key;
      int value;
      if (!(in >> key >> value))
        throw ParseError(path + ": malformed config entry");
      if (key == "n_nodes") cfg.n_nodes = value;
      else if (key == "m1") cfg.m1 = value;
      else if (key == "m2") cfg.m2 = value;
      else if (key == "f_in") cfg.f_in = value;
      else if (key == "f_out") cfg.f_out = value;
      else if (key == "hidden") cfg.hidden = value;
      else if (key == "cheb_k") cfg.cheb_k = value;
      else if (key == "t_in") cfg.t_in = value;
      else if (key == "t_out") cfg.t_out = value;
      else if (key == "assign_embed") cfg.assign_embed = value;
      else throw ParseError(path + ": unknown config key '" + key + "'");
    } else if (kind == "scaler") {
      std::string key;
      double value;
      if (!(in >> key >> value))
        throw ParseError(path + ": malformed scaler entry");
      if (key == "mean") scaler.mean = value;
      else if (key == "std") scaler.std_dev = value;
      else throw ParseError(path + ": unknown scaler key '" + key + "'");
    } else if (kind == "matrix") {
      std::string key;
      Eigen::Index rows, cols;
      if (!(in >> key >> rows >> cols) || rows < 0 || cols < 0)
        throw ParseError(path + ": malformed matrix header");
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
          if (!(in >> m(i, j)))
            throw ParseError(path + ": truncated matrix '" + key + "'");
      matrices[key] = std::move(m);
    } else {
      throw ParseError(path + ": unknown entry kind '" + kind + "'");
    }
  }
  if (kind != "end") throw ParseError(path + ": missing end marker");

  Checkpoint ckpt;
  ckpt.scaler = scaler;
  ckpt.params = init_model(cfg, 0);
  for (Param* p : ckpt.params.parameters()) {
    auto it = matrices.find(p->name);
    if (it == matrices.end())
      throw ParseError(path + ": missing parameter '" + p->name + "'");
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols())
      throw ParseError(path + ": parameter '" + p->name + "' has shape " +
                       shape_str(it->second) + ", expected " +
                       shape_str(p->value));
    p->value = it->second;
  }
  auto a0 = matrices.find("cache.assign0");
  auto a1 = matrices.find("cache.assign1");
  if (a0 != matrices.end() && a1 != matrices.end()) {
    ckpt.params.pool0.cached_assignment = a0->second;
    ckpt.params.pool0.assignment_ready = true;
    ckpt.params.pool1.cached_assignment = a1->second;
    ckpt.params.pool1.assignment_ready = true;
  }
  return ckpt;
}

}  // namespace stgraph
