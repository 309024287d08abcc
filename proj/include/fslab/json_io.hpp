#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "fslab/correspondence.hpp"
#include "fslab/crossed.hpp"
#include "fslab/multiplier.hpp"
#include "json.hpp"

namespace fslab {

using json = nlohmann::ordered_json;

// thrown when an instance file does not match its schema; the message names
// the offending field or arrow
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const json& node, const std::string& where);

json groupoid_to_json(const FiniteGroupoid& g);
FiniteGroupoid groupoid_from_json(const json& node);

json action_to_json(const Action& act);
json correspondence_to_json(const Correspondence& e);
json multiplier_to_json(const Multiplier& m);
json section_to_json(const Section& s);

// Resolves instance files that reference each other by relative path.  A
// node is either an inline object or a string naming a file relative to the
// directory of the file it appears in.  Loads are cached by canonical path
// (and by content for inline nodes), so two references to the same instance
// share one parsed object.
class JsonLoader {
 public:
  explicit JsonLoader(std::filesystem::path base_dir) : base_(std::move(base_dir)) {}

  json read_file(const std::filesystem::path& path);

  std::shared_ptr<const FiniteGroupoid> groupoid(const json& node);
  std::shared_ptr<const Action> action(const json& node);
  std::shared_ptr<const Correspondence> correspondence(const json& node);
  Multiplier multiplier(const json& node);
  AlgebraMap algebra_map_of(const json& node);
  Section section_values(const json& node, const Action& act, const std::string& where);
  std::shared_ptr<const ConcreteAlgebra> algebra_for(const std::shared_ptr<const Action>& act);

 private:
  // fetch a node that is either inline or a relative path; fills the cache
  // key and leaves dir at the directory the content lives in
  json fetch(const json& node, std::filesystem::path& dir, std::string& key,
             const std::string& where);
  std::shared_ptr<const FiniteGroupoid> groupoid_in(const json& node,
                                                    const std::filesystem::path& dir);
  std::shared_ptr<const Action> action_in(const json& node, const std::filesystem::path& dir);
  std::pair<std::shared_ptr<const Action>, std::shared_ptr<const Action>> action_pair(
      const json& content, const std::filesystem::path& dir, const std::string& where);

  std::filesystem::path base_;
  std::map<std::string, std::shared_ptr<const FiniteGroupoid>> groupoids_;
  std::map<std::string, std::shared_ptr<const Action>> actions_;
  std::map<const Action*, std::shared_ptr<const ConcreteAlgebra>> algebras_;
};

}  // namespace fslab
