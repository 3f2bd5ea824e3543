#include "clipita/dataio.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clipita/common.hpp"

namespace clipita {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string where(std::string_view source, std::size_t line) {
  std::string s(source);
  s += ":";
  s += std::to_string(line);
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  return out;
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& in, std::string_view source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where(source, line_no) + ": malformed JSON: " + e.what());
    }
    if (!value.is_object()) {
      throw ParseError(where(source, line_no) + ": expected a JSON object");
    }
    fn(value, line_no);
  }
}

std::string require_string(const json& obj, const char* key, std::string_view source,
                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(where(source, line) + ": field \"" + key +
                     "\" missing or not a string");
  }
  return it->get<std::string>();
}

void write_line(std::ostream& out, const ordered_json& j) {
  out << j.dump() << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// ProductCatalog

ProductCatalog::ProductCatalog(std::vector<ProductRecord> products)
    : products_(std::move(products)) {
  if (products_.empty()) {
    throw ValidationError("product catalog is empty");
  }
  index_.reserve(products_.size());
  for (std::size_t i = 0; i < products_.size(); ++i) {
    const auto& p = products_[i];
    if (p.product_id.empty()) {
      throw ValidationError("product #" + std::to_string(i + 1) + " has an empty id");
    }
    if (p.title.empty()) {
      throw ValidationError("product " + p.product_id + " has an empty title");
    }
    if (p.attributes.empty()) {
      throw ValidationError("product " + p.product_id + " has no attributes");
    }
    if (!index_.emplace(p.product_id, i).second) {
      throw ValidationError("duplicate product_id " + p.product_id);
    }
  }
}

const ProductRecord* ProductCatalog::find(std::string_view product_id) const {
  auto it = index_.find(std::string(product_id));
  return it == index_.end() ? nullptr : &products_[it->second];
}

const ProductRecord& ProductCatalog::at(std::string_view product_id) const {
  if (const auto* p = find(product_id)) {
    return *p;
  }
  throw ValidationError("unknown product_id " + std::string(product_id));
}

ProductCatalog read_products(std::istream& in, std::string_view source) {
  std::vector<ProductRecord> products;
  std::unordered_map<std::string, std::size_t> first_line;
  for_each_json_line(in, source, [&](const json& obj, std::size_t line) {
    ProductRecord p;
    p.product_id = require_string(obj, "product_id", source, line);
    p.title = require_string(obj, "title", source, line);
    p.image_id = require_string(obj, "image_id", source, line);
    p.leaf_category_id = require_string(obj, "leaf_category_id", source, line);
    auto attrs = obj.find("attributes");
    if (attrs == obj.end() || !attrs->is_array()) {
      throw ParseError(where(source, line) + ": field \"attributes\" missing or not an array");
    }
    for (const auto& a : *attrs) {
      if (!a.is_string()) {
        throw ParseError(where(source, line) + ": attributes must be strings");
      }
      p.attributes.push_back(a.get<std::string>());
    }
    if (p.attributes.empty()) {
      throw ValidationError(where(source, line) + ": product " + p.product_id +
                            " has an empty attribute list");
    }
    if (p.title.empty()) {
      throw ValidationError(where(source, line) + ": product " + p.product_id +
                            " has an empty title");
    }
    auto [it, inserted] = first_line.emplace(p.product_id, line);
    if (!inserted) {
      throw ValidationError(where(source, line) + ": duplicate product_id " + p.product_id +
                            " (first seen on line " + std::to_string(it->second) + ")");
    }
    products.push_back(std::move(p));
  });
  if (products.empty()) {
    throw ValidationError(std::string(source) + ": no products");
  }
  return ProductCatalog(std::move(products));
}

ProductCatalog load_products(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_products(in, path.string());
}

void write_products(std::ostream& out, const ProductCatalog& catalog) {
  for (const auto& p : catalog.products()) {
    ordered_json j;
    j["product_id"] = p.product_id;
    j["title"] = p.title;
    j["image_id"] = p.image_id;
    j["attributes"] = p.attributes;
    j["leaf_category_id"] = p.leaf_category_id;
    write_line(out, j);
  }
}

void save_products(const std::filesystem::path& path, const ProductCatalog& catalog) {
  auto out = open_output(path);
  write_products(out, catalog);
}

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids,
                                 std::vector<double> data)
    : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
  if (dim_ == 0) {
    throw ValidationError("embedding dimension must be positive");
  }
  if (data_.size() != ids_.size() * dim_) {
    throw ValidationError("embedding data size does not match ids x dim");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    bool nonzero = false;
    for (double x : row(i)) {
      if (!std::isfinite(x)) {
        throw ValidationError("embedding " + ids_[i] + " has a non-finite entry");
      }
      nonzero = nonzero || x != 0.0;
    }
    if (!nonzero) {
      throw ValidationError("embedding " + ids_[i] + " is the zero vector");
    }
    if (!index_.emplace(ids_[i], i).second) {
      throw ValidationError("duplicate embedding id " + ids_[i]);
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::span<const double> EmbeddingMatrix::row(std::string_view id) const {
  if (auto i = find(id)) {
    return row(*i);
  }
  throw ValidationError("missing embedding for \"" + std::string(id) + "\"");
}

EmbeddingMatrix read_embeddings(std::istream& in, std::optional<std::size_t> expected_dim,
                                std::string_view source) {
  std::vector<std::string> ids;
  std::vector<double> data;
  std::optional<std::size_t> dim = expected_dim;
  std::unordered_map<std::string, std::size_t> first_line;
  for_each_json_line(in, source, [&](const json& obj, std::size_t line) {
    std::string id = require_string(obj, "id", source, line);
    auto vec = obj.find("vec");
    if (vec == obj.end() || !vec->is_array()) {
      throw ParseError(where(source, line) + ": field \"vec\" missing or not an array");
    }
    if (!dim) {
      dim = vec->size();
    }
    if (vec->size() != *dim) {
      throw ValidationError(where(source, line) + ": dimension mismatch: expected " +
                            std::to_string(*dim) + ", got " + std::to_string(vec->size()));
    }
    bool nonzero = false;
    for (const auto& x : *vec) {
      if (!x.is_number()) {
        // NaN and Inf are not representable in JSON; null or strings land here.
        throw ValidationError(where(source, line) + ": non-finite or non-numeric entry");
      }
      const double v = x.get<double>();
      if (!std::isfinite(v)) {
        throw ValidationError(where(source, line) + ": non-finite entry");
      }
      nonzero = nonzero || v != 0.0;
      data.push_back(v);
    }
    if (!nonzero) {
      throw ValidationError(where(source, line) + ": zero vector for id " + id);
    }
    auto [it, inserted] = first_line.emplace(id, line);
    if (!inserted) {
      throw ValidationError(where(source, line) + ": duplicate id " + id);
    }
    ids.push_back(std::move(id));
  });
  if (!dim || *dim == 0) {
    throw ValidationError(std::string(source) + ": no embeddings or zero dimension");
  }
  return EmbeddingMatrix(*dim, std::move(ids), std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_dim) {
  auto in = open_input(path);
  return read_embeddings(in, expected_dim, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix) {
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    ordered_json j;
    j["id"] = matrix.ids()[i];
    auto r = matrix.row(i);
    j["vec"] = std::vector<double>(r.begin(), r.end());
    write_line(out, j);
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  auto out = open_output(path);
  write_embeddings(out, matrix);
}

// ---------------------------------------------------------------------------
// Categories

std::vector<CategoryRecord> read_categories(std::istream& in, std::string_view source) {
  std::vector<CategoryRecord> records;
  for_each_json_line(in, source, [&](const json& obj, std::size_t line) {
    CategoryRecord r;
    r.category_id = require_string(obj, "category_id", source, line);
    r.name = require_string(obj, "name", source, line);
    auto parent = obj.find("parent_id");
    if (parent == obj.end()) {
      throw ParseError(where(source, line) + ": field \"parent_id\" missing");
    }
    if (parent->is_string()) {
      r.parent_id = parent->get<std::string>();
    } else if (!parent->is_null()) {
      throw ParseError(where(source, line) + ": parent_id must be a string or null");
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<CategoryRecord> load_categories(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_categories(in, path.string());
}

void write_categories(std::ostream& out, const std::vector<CategoryRecord>& records) {
  for (const auto& r : records) {
    ordered_json j;
    j["category_id"] = r.category_id;
    j["name"] = r.name;
    if (r.parent_id) {
      j["parent_id"] = *r.parent_id;
    } else {
      j["parent_id"] = nullptr;
    }
    write_line(out, j);
  }
}

void save_categories(const std::filesystem::path& path,
                     const std::vector<CategoryRecord>& records) {
  auto out = open_output(path);
  write_categories(out, records);
}

// ---------------------------------------------------------------------------

SplitAssignment split_products(const ProductCatalog& catalog, std::string_view salt) {
  SplitAssignment split;
  for (const auto& p : catalog.products()) {
    std::string key = p.product_id;
    key += salt;
    switch (hash64(key, 0) % 10) {
      case 8:
        split.val.insert(p.product_id);
        break;
      case 9:
        split.test.insert(p.product_id);
        break;
      default:
        split.train.insert(p.product_id);
        break;
    }
  }
  return split;
}

}  // namespace clipita
