#pragma once

#include "tablerouter/category.hpp"
#include "tablerouter/error.hpp"
#include "tablerouter/grid.hpp"
#include "tablerouter/manifest.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

namespace httplib {
class Server;
}

namespace tablerouter::annot {

// Grid coordinates are 0-based slot positions, header rows included.
struct SetCellText {
  size_t r = 0, c = 0;
  std::string text;
};
struct InsertRow {
  size_t at = 0;
};
struct DeleteRow {
  size_t at = 0;
};
struct DuplicateRow {
  size_t at = 0;
};
// Inclusive rectangle. Spans fully inside it are absorbed.
struct MergeCells {
  size_t r1 = 0, c1 = 0, r2 = 0, c2 = 0;
};
struct SplitCell {
  size_t r = 0, c = 0;
};
struct SetHeaderRowCount {
  size_t n = 0;
};

using EditOp = std::variant<SetCellText, InsertRow, DeleteRow, DuplicateRow, MergeCells, SplitCell, SetHeaderRowCount>;

EditOp edit_op_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EditOp& op);

class EditRejected : public Error {
 public:
  EditRejected(ErrorCode code, const std::string& msg, std::string invariant = {})
      : Error(code, msg), invariant_(std::move(invariant)) {}
  const std::string& violated_invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

struct GridState {
  TableGrid grid;
  std::vector<RowRole> roles;  // one per grid row
};

// Pure edit: returns the new state or throws EditRejected; `s` is untouched.
GridState apply_edit(const GridState& s, const EditOp& op);

struct Session {
  std::string sample_id;
  GridState state;
  uint64_t version = 0;
  bool dirty = false;
};

struct Response {
  int status = 200;
  nlohmann::json body;
  std::string raw;  // non-JSON payloads (images)
  std::string content_type = "application/json";
};

// Sessions for every manifest sample, held in memory; save writes canonical
// HTML and a roles sidecar under <manifest dir>/annotations/ and those files
// take precedence over the manifest on the next start.
class AnnotatorService {
 public:
  explicit AnnotatorService(const std::filesystem::path& manifest);

  Response list_samples() const;
  Response get_sample(const std::string& id) const;
  Response post_edit(const std::string& id, const nlohmann::json& body);
  Response post_save(const std::string& id, const nlohmann::json& body);
  Response post_trace(const std::string& id, const nlohmann::json& body) const;
  Response get_image(const std::string& id) const;

  // Dispatches a REST call; used by the HTTP server and by tests.
  Response handle(const std::string& method, const std::string& path, const std::string& body);

  void mount(httplib::Server& server);

  std::filesystem::path annotation_dir() const { return dir_ / "annotations"; }
  const std::vector<std::string>& load_warnings() const { return warnings_; }

 private:
  struct Slot {
    mutable std::mutex mu;
    Session session;
    const Sample* sample = nullptr;
  };

  Slot& slot(const std::string& id);
  const Slot& slot(const std::string& id) const;

  std::filesystem::path dir_;
  std::vector<Sample> samples_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::vector<std::string> warnings_;
};

nlohmann::json grid_json(const TableGrid& g);

// Serves until the process is stopped.
void serve(AnnotatorService& svc, const std::string& host, int port);

}  // namespace tablerouter::annot
