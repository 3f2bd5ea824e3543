#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clipita {

struct ProductRecord {
  std::string product_id;
  std::string title;
  std::string image_id;
  std::vector<std::string> attributes;
  std::string leaf_category_id;

  bool operator==(const ProductRecord&) const = default;
};

/// Products in file order, indexed by id. Construction validates unique ids,
/// non-empty titles and non-empty attribute lists.
class ProductCatalog {
 public:
  ProductCatalog() = default;
  explicit ProductCatalog(std::vector<ProductRecord> products);

  const std::vector<ProductRecord>& products() const noexcept { return products_; }
  std::size_t size() const noexcept { return products_.size(); }
  bool empty() const noexcept { return products_.empty(); }

  const ProductRecord* find(std::string_view product_id) const;
  const ProductRecord& at(std::string_view product_id) const;

  bool operator==(const ProductCatalog& other) const {
    return products_ == other.products_;
  }

 private:
  std::vector<ProductRecord> products_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Rows of a fixed dimension keyed by string id. Rows are finite and never
/// the zero vector.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::vector<std::string> ids,
                  std::vector<double> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws ValidationError naming the id when absent.
  std::span<const double> row(std::string_view id) const;

  bool operator==(const EmbeddingMatrix& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One line of a categories file. parent_id is empty for roots.
struct CategoryRecord {
  std::string category_id;
  std::string name;
  std::optional<std::string> parent_id;

  bool operator==(const CategoryRecord&) const = default;
};

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> val;
  std::set<std::string> test;
};

// JSON-lines readers. Errors carry the source name and 1-based line number.
ProductCatalog read_products(std::istream& in, std::string_view source = "<stream>");
ProductCatalog load_products(const std::filesystem::path& path);
void write_products(std::ostream& out, const ProductCatalog& catalog);
void save_products(const std::filesystem::path& path, const ProductCatalog& catalog);

EmbeddingMatrix read_embeddings(std::istream& in,
                                std::optional<std::size_t> expected_dim = std::nullopt,
                                std::string_view source = "<stream>");
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_dim = std::nullopt);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& matrix);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

std::vector<CategoryRecord> read_categories(std::istream& in,
                                            std::string_view source = "<stream>");
std::vector<CategoryRecord> load_categories(const std::filesystem::path& path);
void write_categories(std::ostream& out, const std::vector<CategoryRecord>& records);
void save_categories(const std::filesystem::path& path,
                     const std::vector<CategoryRecord>& records);

/// Bucket = hash64(product_id + salt, 0) mod 10; 0-7 train, 8 val, 9 test.
SplitAssignment split_products(const ProductCatalog& catalog, std::string_view salt);

}  // namespace clipita
