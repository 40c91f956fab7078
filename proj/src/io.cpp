#include "nscr/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>

namespace nscr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::int64_t parse_int(const std::string& s, const std::string& file, std::size_t line) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(file, line, "expected an integer, got '" + s + "'");
  return value;
}

double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(file, line, "expected a number, got '" + s + "'");
  return value;
}

struct TsvReader {
  std::string file;
  std::ifstream stream;
  std::size_t line_number = 0;

  TsvReader(const fs::path& path, const std::string& expected_header)
      : file(path.string()), stream(path) {
    if (!stream) throw DataError("cannot open " + file);
    std::string header;
    if (!std::getline(stream, header))
      throw ParseError(file, 1, "missing header line");
    ++line_number;
    if (header != expected_header)
      throw ParseError(file, 1, "unexpected header '" + header + "'");
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(stream, line)) {
      ++line_number;
      if (line.empty()) continue;
      fields = split_tabs(line);
      return true;
    }
    return false;
  }
};

void write_vocab(const fs::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary);
  out << "id\tindex\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << i << '\n';
}

std::vector<std::string> read_vocab(const fs::path& path) {
  TsvReader reader(path, "id\tindex");
  std::vector<std::string> ids;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != 2)
      throw ParseError(reader.file, reader.line_number, "expected 2 columns");
    const auto index = parse_int(fields[1], reader.file, reader.line_number);
    if (index != static_cast<std::int64_t>(ids.size()))
      throw ParseError(reader.file, reader.line_number, "vocabulary indices must be dense");
    ids.push_back(fields[0]);
  }
  return ids;
}

std::map<std::string, int> index_of(const std::vector<std::string>& ids) {
  std::map<std::string, int> map;
  for (std::size_t i = 0; i < ids.size(); ++i) map[ids[i]] = static_cast<int>(i);
  return map;
}

}  // namespace

void save_bundle(const DataBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  write_vocab(dir / "users.vocab.tsv", bundle.user_ids);
  write_vocab(dir / "items.vocab.tsv", bundle.item_ids);
  write_vocab(dir / "social_users.vocab.tsv", bundle.social_ids);
  write_vocab(dir / "attributes.vocab.tsv", bundle.attr_ids);

  {
    std::ofstream out(dir / "interactions.tsv", std::ios::binary);
    out << "user_id\titem_id\ttimestamp\n";
    for (const auto& row : bundle.interactions.rows())
      out << bundle.user_ids[row.user] << '\t' << bundle.item_ids[row.item] << '\t'
          << row.timestamp << '\n';
  }
  {
    std::ofstream out(dir / "user_attrs.tsv", std::ios::binary);
    out << "entity_id\tattribute_id\n";
    for (std::size_t u = 0; u < bundle.catalog.user_attrs.size(); ++u)
      for (int a : bundle.catalog.user_attrs[u])
        out << bundle.user_ids[u] << '\t' << bundle.attr_ids[a] << '\n';
  }
  {
    std::ofstream out(dir / "item_attrs.tsv", std::ios::binary);
    out << "entity_id\tattribute_id\n";
    for (std::size_t i = 0; i < bundle.catalog.item_attrs.size(); ++i)
      for (int a : bundle.catalog.item_attrs[i])
        out << bundle.item_ids[i] << '\t' << bundle.attr_ids[a] << '\n';
  }
  {
    std::ofstream out(dir / "social_edges.tsv", std::ios::binary);
    out << "user_a\tuser_b\tweight\n";
    const auto& adj = bundle.graph.adjacency();
    for (int col = 0; col < adj.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(adj, col); it; ++it)
        if (it.row() < it.col())
          out << bundle.social_ids[it.row()] << '\t' << bundle.social_ids[it.col()]
              << '\t' << format_double(it.value()) << '\n';
  }
  {
    std::ofstream out(dir / "bridge.tsv", std::ios::binary);
    out << "social_user_id\tinfo_user_id\n";
    for (const auto& [social, info] : bundle.graph.bridge_map())
      out << bundle.social_ids[social] << '\t' << bundle.user_ids[info] << '\n';
  }
  if (!bundle.user_groups.empty()) {
    std::ofstream out(dir / "groups.tsv", std::ios::binary);
    out << "kind\tentity_id\tgroup\n";
    for (std::size_t u = 0; u < bundle.user_groups.size(); ++u)
      out << "user\t" << bundle.user_ids[u] << '\t' << bundle.user_groups[u] << '\n';
    for (std::size_t i = 0; i < bundle.item_groups.size(); ++i)
      out << "item\t" << bundle.item_ids[i] << '\t' << bundle.item_groups[i] << '\n';
    for (std::size_t s = 0; s < bundle.social_groups.size(); ++s)
      out << "social\t" << bundle.social_ids[s] << '\t' << bundle.social_groups[s]
          << '\n';
  }
}

DataBundle load_bundle(const fs::path& dir) {
  const auto user_ids = read_vocab(dir / "users.vocab.tsv");
  const auto item_ids = read_vocab(dir / "items.vocab.tsv");
  const auto social_ids = read_vocab(dir / "social_users.vocab.tsv");
  const auto attr_ids = read_vocab(dir / "attributes.vocab.tsv");
  const auto user_index = index_of(user_ids);
  const auto item_index = index_of(item_ids);
  const auto social_index = index_of(social_ids);
  const auto attr_index = index_of(attr_ids);

  std::vector<Interaction> rows;
  {
    TsvReader reader(dir / "interactions.tsv", "user_id\titem_id\ttimestamp");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (fields.size() != 3)
        throw ParseError(reader.file, reader.line_number, "expected 3 columns");
      auto u = user_index.find(fields[0]);
      if (u == user_index.end())
        throw ParseError(reader.file, reader.line_number,
                         "unknown user '" + fields[0] + "'");
      auto i = item_index.find(fields[1]);
      if (i == item_index.end())
        throw ParseError(reader.file, reader.line_number,
                         "unknown item '" + fields[1] + "'");
      rows.push_back({u->second, i->second,
                      parse_int(fields[2], reader.file, reader.line_number)});
    }
  }

  AttributeCatalog catalog;
  catalog.num_attributes = static_cast<int>(attr_ids.size());
  catalog.user_attrs.resize(user_ids.size());
  catalog.item_attrs.resize(item_ids.size());
  auto read_attrs = [&](const fs::path& path, const std::map<std::string, int>& entities,
                        std::vector<std::vector<int>>& lists) {
    TsvReader reader(path, "entity_id\tattribute_id");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (fields.size() != 2)
        throw ParseError(reader.file, reader.line_number, "expected 2 columns");
      auto e = entities.find(fields[0]);
      if (e == entities.end())
        throw DanglingReference(reader.file + ":" + std::to_string(reader.line_number) +
                                ": attribute of unknown entity '" + fields[0] + "'");
      auto a = attr_index.find(fields[1]);
      if (a == attr_index.end())
        throw DanglingReference(reader.file + ":" + std::to_string(reader.line_number) +
                                ": unknown attribute '" + fields[1] + "'");
      lists[e->second].push_back(a->second);
    }
    for (auto& attrs : lists) {
      std::sort(attrs.begin(), attrs.end());
      attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
    }
  };
  read_attrs(dir / "user_attrs.tsv", user_index, catalog.user_attrs);
  read_attrs(dir / "item_attrs.tsv", item_index, catalog.item_attrs);
  catalog.validate();

  std::map<std::pair<int, int>, double> edge_map;
  {
    TsvReader reader(dir / "social_edges.tsv", "user_a\tuser_b\tweight");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (fields.size() != 2 && fields.size() != 3)
        throw ParseError(reader.file, reader.line_number, "expected 2 or 3 columns");
      auto a = social_index.find(fields[0]);
      auto b = social_index.find(fields[1]);
      if (a == social_index.end() || b == social_index.end())
        throw DanglingReference(reader.file + ":" + std::to_string(reader.line_number) +
                                ": edge to unknown social user");
      const double weight =
          fields.size() == 3 ? parse_double(fields[2], reader.file, reader.line_number)
                             : 1.0;
      auto key = std::minmax(a->second, b->second);
      auto [it, inserted] = edge_map.emplace(key, weight);
      if (!inserted && it->second != weight)
        throw ParseError(reader.file, reader.line_number,
                         "conflicting weights for a duplicated edge");
    }
  }
  std::vector<Eigen::Triplet<double>> edges;
  for (const auto& [key, weight] : edge_map)
    edges.emplace_back(key.first, key.second, weight);

  std::map<int, int> bridge_map;
  {
    TsvReader reader(dir / "bridge.tsv", "social_user_id\tinfo_user_id");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (fields.size() != 2)
        throw ParseError(reader.file, reader.line_number, "expected 2 columns");
      auto s = social_index.find(fields[0]);
      auto u = user_index.find(fields[1]);
      if (s == social_index.end() || u == user_index.end())
        throw DanglingReference(reader.file + ":" + std::to_string(reader.line_number) +
                                ": bridge entry references an unknown user");
      bridge_map[s->second] = u->second;
    }
  }

  DataBundle bundle{InteractionTable(static_cast<int>(user_ids.size()),
                                     static_cast<int>(item_ids.size()), std::move(rows)),
                    std::move(catalog),
                    SocialGraph(static_cast<int>(social_ids.size()), edges,
                                std::move(bridge_map))};
  bundle.user_ids = user_ids;
  bundle.item_ids = item_ids;
  bundle.social_ids = social_ids;
  bundle.attr_ids = attr_ids;

  if (fs::exists(dir / "groups.tsv")) {
    bundle.user_groups.assign(user_ids.size(), -1);
    bundle.item_groups.assign(item_ids.size(), -1);
    bundle.social_groups.assign(social_ids.size(), -1);
    TsvReader reader(dir / "groups.tsv", "kind\tentity_id\tgroup");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (fields.size() != 3)
        throw ParseError(reader.file, reader.line_number, "expected 3 columns");
      const int group =
          static_cast<int>(parse_int(fields[2], reader.file, reader.line_number));
      if (fields[0] == "user")
        bundle.user_groups[user_index.at(fields[1])] = group;
      else if (fields[0] == "item")
        bundle.item_groups[item_index.at(fields[1])] = group;
      else if (fields[0] == "social")
        bundle.social_groups[social_index.at(fields[1])] = group;
      else
        throw ParseError(reader.file, reader.line_number,
                         "unknown entity kind '" + fields[0] + "'");
    }
  }
  return bundle;
}

DataBundle apply_min_degree_filter(const DataBundle& bundle, int min_friends) {
  const auto& adj = bundle.graph.adjacency();
  const int n = bundle.graph.num_social_users();
  std::vector<int> neighbor_count(n, 0);
  for (int col = 0; col < adj.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(adj, col); it; ++it) ++neighbor_count[it.col()];

  std::vector<int> new_index(n, -1);
  std::vector<std::string> social_ids;
  std::vector<int> social_groups;
  for (int s = 0; s < n; ++s) {
    if (neighbor_count[s] < min_friends) continue;
    new_index[s] = static_cast<int>(social_ids.size());
    social_ids.push_back(bundle.social_ids[s]);
    if (!bundle.social_groups.empty()) social_groups.push_back(bundle.social_groups[s]);
  }

  std::vector<Eigen::Triplet<double>> edges;
  for (int col = 0; col < adj.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(adj, col); it; ++it)
      if (it.row() < it.col() && new_index[it.row()] >= 0 && new_index[it.col()] >= 0)
        edges.emplace_back(new_index[it.row()], new_index[it.col()], it.value());

  std::map<int, int> bridge_map;
  for (const auto& [social, info] : bundle.graph.bridge_map())
    if (new_index[social] >= 0) bridge_map[new_index[social]] = info;

  DataBundle out{bundle.interactions, bundle.catalog,
                 SocialGraph(static_cast<int>(social_ids.size()), edges,
                             std::move(bridge_map))};
  out.user_ids = bundle.user_ids;
  out.item_ids = bundle.item_ids;
  out.social_ids = std::move(social_ids);
  out.attr_ids = bundle.attr_ids;
  out.user_groups = bundle.user_groups;
  out.item_groups = bundle.item_groups;
  out.social_groups = std::move(social_groups);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic, little-endian header length, JSON header with
// a tensor table, then raw row-major doubles.

namespace {

constexpr char kMagic[8] = {'N', 'S', 'C', 'R', 'C', 'K', 'P', '1'};

struct TensorWriter {
  json table = json::array();
  std::vector<const Matrix*> matrices;
  std::deque<Matrix> owned;  // stable addresses

  void add(const std::string& name, const Matrix& m) {
    table.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    matrices.push_back(&m);
  }
  void add(const std::string& name, const Vector& v) {
    owned.push_back(v);
    table.push_back({{"name", name}, {"rows", v.size()}, {"cols", 1}});
    matrices.push_back(&owned.back());
  }
  void add_scalar(const std::string& name, double v) {
    add(name, Vector(Vector::Constant(1, v)));
  }
};

void write_matrix(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

Matrix read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(r, c) = v;
    }
  if (!in) throw DataError("truncated checkpoint tensor data");
  return m;
}

json attrs_to_json(const std::vector<std::vector<int>>& lists) {
  json out = json::array();
  for (const auto& attrs : lists) out.push_back(attrs);
  return out;
}

std::vector<std::vector<int>> attrs_from_json(const json& j) {
  std::vector<std::vector<int>> lists;
  for (const auto& row : j) lists.push_back(row.get<std::vector<int>>());
  return lists;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  TensorWriter tensors;
  if (ckpt.kind == "nscr") {
    const auto& p = *ckpt.nscr_params;
    tensors.add("user_emb", p.user_emb);
    tensors.add("item_emb", p.item_emb);
    tensors.add("attr_emb", p.attr_emb);
    for (int l = 0; l < p.num_hidden_layers(); ++l) {
      tensors.add("hidden_w_" + std::to_string(l), p.hidden_w[l]);
      tensors.add("hidden_b_" + std::to_string(l), p.hidden_b[l]);
    }
    tensors.add("pred_w", p.pred_w);
    tensors.add("user_acc", p.user_acc);
    tensors.add("item_acc", p.item_acc);
    tensors.add("attr_acc", p.attr_acc);
    for (int l = 0; l < p.num_hidden_layers(); ++l) {
      tensors.add("hidden_w_acc_" + std::to_string(l), p.hidden_w_acc[l]);
      tensors.add("hidden_b_acc_" + std::to_string(l), p.hidden_b_acc[l]);
    }
    tensors.add("pred_w_acc", p.pred_w_acc);
    tensors.add("social_p", ckpt.social_embeddings);
  } else if (ckpt.kind == "mf" || ckpt.kind == "sr") {
    const auto& p = *ckpt.mf_params;
    tensors.add("user_vecs", p.user_vecs);
    tensors.add("item_vecs", p.item_vecs);
    tensors.add("user_acc", p.user_acc);
    tensors.add("item_acc", p.item_acc);
  } else if (ckpt.kind == "sfm") {
    const auto& p = *ckpt.fm_params;
    tensors.add_scalar("bias", p.bias);
    tensors.add_scalar("bias_acc", p.bias_acc);
    tensors.add("linear", p.linear);
    tensors.add("factors", p.factors);
    tensors.add("linear_acc", p.linear_acc);
    tensors.add("factors_acc", p.factors_acc);
  } else if (ckpt.kind == "itempop") {
    Vector counts = Eigen::Map<const Vector>(ckpt.item_counts.data(),
                                             ckpt.item_counts.size());
    tensors.add("item_counts", counts);
  } else {
    throw DataError("unknown checkpoint kind '" + ckpt.kind + "'");
  }

  json header;
  header["format_version"] = 1;
  header["kind"] = ckpt.kind;
  header["hyperparams"] = {{"embedding_size", ckpt.hp.embedding_size},
                           {"num_hidden_layers", ckpt.hp.num_hidden_layers},
                           {"dropout_ratio", ckpt.hp.dropout_ratio},
                           {"learning_rate", ckpt.hp.learning_rate},
                           {"batch_size", ckpt.hp.batch_size},
                           {"tradeoff_mu", ckpt.hp.tradeoff_mu},
                           {"init_std", ckpt.hp.init_std},
                           {"seed", ckpt.hp.seed}};
  header["split_seed"] = ckpt.split_seed;
  header["use_attributes"] = ckpt.use_attributes;
  header["sr_beta"] = ckpt.sr_beta;
  header["num_attributes"] = ckpt.catalog.num_attributes;
  header["user_attrs"] = attrs_to_json(ckpt.catalog.user_attrs);
  header["item_attrs"] = attrs_to_json(ckpt.catalog.item_attrs);
  json bridge = json::array();
  for (const auto& [social, info] : ckpt.bridge_map)
    bridge.push_back({social, info});
  header["bridge_map"] = bridge;
  header["user_ids"] = ckpt.user_ids;
  header["item_ids"] = ckpt.item_ids;
  header["social_ids"] = ckpt.social_ids;
  header["attr_ids"] = ckpt.attr_ids;
  if (ckpt.kind == "sfm") {
    const auto& p = *ckpt.fm_params;
    header["fm_shape"] = {{"num_users", p.num_users},
                          {"num_items", p.num_items},
                          {"num_attributes", p.num_attributes},
                          {"num_social", p.num_social}};
  }
  header["tensors"] = tensors.table;

  const std::string header_bytes = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header_bytes.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_bytes.data(), header_bytes.size());
  for (const Matrix* m : tensors.matrices) write_matrix(out, *m);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_bytes(len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header");
  const json header = json::parse(header_bytes);
  if (header.at("format_version").get<int>() != 1)
    throw DataError("unsupported checkpoint format version");

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  const auto& hp = header.at("hyperparams");
  ckpt.hp.embedding_size = hp.at("embedding_size").get<int>();
  ckpt.hp.num_hidden_layers = hp.at("num_hidden_layers").get<int>();
  ckpt.hp.dropout_ratio = hp.at("dropout_ratio").get<double>();
  ckpt.hp.learning_rate = hp.at("learning_rate").get<double>();
  ckpt.hp.batch_size = hp.at("batch_size").get<int>();
  ckpt.hp.tradeoff_mu = hp.at("tradeoff_mu").get<double>();
  ckpt.hp.init_std = hp.at("init_std").get<double>();
  ckpt.hp.seed = hp.at("seed").get<std::uint64_t>();
  ckpt.split_seed = header.at("split_seed").get<std::uint64_t>();
  ckpt.use_attributes = header.at("use_attributes").get<bool>();
  ckpt.sr_beta = header.at("sr_beta").get<double>();
  ckpt.catalog.num_attributes = header.at("num_attributes").get<int>();
  ckpt.catalog.user_attrs = attrs_from_json(header.at("user_attrs"));
  ckpt.catalog.item_attrs = attrs_from_json(header.at("item_attrs"));
  for (const auto& pair : header.at("bridge_map"))
    ckpt.bridge_map[pair[0].get<int>()] = pair[1].get<int>();
  ckpt.user_ids = header.at("user_ids").get<std::vector<std::string>>();
  ckpt.item_ids = header.at("item_ids").get<std::vector<std::string>>();
  ckpt.social_ids = header.at("social_ids").get<std::vector<std::string>>();
  ckpt.attr_ids = header.at("attr_ids").get<std::vector<std::string>>();

  std::map<std::string, Matrix> tensors;
  for (const auto& entry : header.at("tensors")) {
    tensors[entry.at("name").get<std::string>()] =
        read_matrix(in, entry.at("rows").get<Eigen::Index>(),
                    entry.at("cols").get<Eigen::Index>());
  }

  auto mat = [&](const std::string& name) -> Matrix& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint missing tensor " + name);
    return it->second;
  };
  auto vec = [&](const std::string& name) { return Vector(mat(name).col(0)); };

  if (ckpt.kind == "nscr") {
    ModelParameters p;
    p.user_emb = mat("user_emb");
    p.item_emb = mat("item_emb");
    p.attr_emb = mat("attr_emb");
    for (int l = 0; l < ckpt.hp.num_hidden_layers; ++l) {
      p.hidden_w.push_back(mat("hidden_w_" + std::to_string(l)));
      p.hidden_b.push_back(vec("hidden_b_" + std::to_string(l)));
      p.hidden_w_acc.push_back(mat("hidden_w_acc_" + std::to_string(l)));
      p.hidden_b_acc.push_back(vec("hidden_b_acc_" + std::to_string(l)));
    }
    p.pred_w = vec("pred_w");
    p.user_acc = mat("user_acc");
    p.item_acc = mat("item_acc");
    p.attr_acc = mat("attr_acc");
    p.pred_w_acc = vec("pred_w_acc");
    ckpt.nscr_params = std::move(p);
    ckpt.social_embeddings = mat("social_p");
  } else if (ckpt.kind == "mf" || ckpt.kind == "sr") {
    MfParameters p;
    p.user_vecs = mat("user_vecs");
    p.item_vecs = mat("item_vecs");
    p.user_acc = mat("user_acc");
    p.item_acc = mat("item_acc");
    ckpt.mf_params = std::move(p);
  } else if (ckpt.kind == "sfm") {
    FmParameters p;
    p.bias = mat("bias")(0, 0);
    p.bias_acc = mat("bias_acc")(0, 0);
    p.linear = vec("linear");
    p.factors = mat("factors");
    p.linear_acc = vec("linear_acc");
    p.factors_acc = mat("factors_acc");
    const auto& shape = header.at("fm_shape");
    p.num_users = shape.at("num_users").get<int>();
    p.num_items = shape.at("num_items").get<int>();
    p.num_attributes = shape.at("num_attributes").get<int>();
    p.num_social = shape.at("num_social").get<int>();
    ckpt.fm_params = std::move(p);
  } else if (ckpt.kind == "itempop") {
    Vector counts = vec("item_counts");
    ckpt.item_counts.assign(counts.data(), counts.data() + counts.size());
  } else {
    throw DataError("unknown checkpoint kind '" + ckpt.kind + "'");
  }
  return ckpt;
}

}  // namespace nscr
