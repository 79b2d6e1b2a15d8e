#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sharecause/dissemination.h"

namespace sharecause {
namespace {

constexpr const char* kMagic = "sharecause-model";

void write_block(std::ostream& out, const char* name, const double* data,
                 Eigen::Index rows, Eigen::Index cols) {
  out << "# " << name << ' ' << rows << ' ' << cols << '\n';
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_exact(data[r * cols + c]);
    }
    out << '\n';
  }
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(std::string("model file truncated before ") + what);
  }
  return line;
}

void read_block(std::istream& in, const std::string& expect, double* data,
                Eigen::Index rows, Eigen::Index cols) {
  std::istringstream hdr(next_line(in, expect.c_str()));
  std::string hash, name;
  Eigen::Index r = -1, c = -1;
  hdr >> hash >> name >> r >> c;
  if (hash != "#" || name != expect || r != rows || c != cols) {
    throw ValidationError("model file: malformed block header for " + expect);
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    std::istringstream row(next_line(in, expect.c_str()));
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw ValidationError("model file: short row in block " + expect);
      }
      try {
        std::size_t used = 0;
        data[i * cols + j] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError("model file: bad number '" + cell +
                              "' in block " + expect);
      }
    }
  }
}

std::vector<std::string> read_ids(std::istream& in, const std::string& expect,
                                  std::size_t n) {
  std::istringstream hdr(next_line(in, expect.c_str()));
  std::string hash, name;
  std::size_t count = 0;
  hdr >> hash >> name >> count;
  if (hash != "#" || name != expect || count != n) {
    throw ValidationError("model file: malformed id block " + expect);
  }
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t k = 0; k < n; ++k) ids.push_back(next_line(in, expect.c_str()));
  return ids;
}

}  // namespace

void save_model(std::ostream& out, const FactorModel& model,
                const IndexMap& users, const IndexMap& items) {
  if (users.size() != model.num_users() || items.size() != model.num_items()) {
    throw ValidationError("index maps do not match model dimensions");
  }
  out << kMagic << " v1 backbone=" << to_string(model.backbone())
      << " users=" << model.num_users() << " items=" << model.num_items()
      << " dim=" << model.dims() << " hidden=" << model.hidden() << '\n';
  out << "# users " << users.size() << '\n';
  for (const auto& id : users.ids()) out << id << '\n';
  out << "# items " << items.size() << '\n';
  for (const auto& id : items.ids()) out << id << '\n';
  const auto& p = model.params();
  write_block(out, "U", p.user_emb.data(), p.user_emb.rows(), p.user_emb.cols());
  write_block(out, "V", p.item_emb.data(), p.item_emb.rows(), p.item_emb.cols());
  if (model.backbone() == Backbone::kNeural) {
    write_block(out, "hidden_w", p.hidden_w.data(), p.hidden_w.rows(),
                p.hidden_w.cols());
    write_block(out, "hidden_b", p.hidden_b.data(), 1, p.hidden_b.size());
    write_block(out, "out_w", p.out_w.data(), 1, p.out_w.size());
    write_block(out, "out_b", p.out_b.data(), 1, 1);
  }
}

LoadedModel load_model(std::istream& in) {
  std::istringstream header(next_line(in, "header"));
  std::string magic, version;
  header >> magic >> version;
  if (magic != kMagic || version != "v1") {
    throw ValidationError("not a sharecause model file");
  }
  std::string backbone_text;
  std::size_t users = 0, items = 0, dim = 0, hidden = 0;
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ValidationError("bad model header field");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "backbone") {
      backbone_text = value;
    } else if (key == "users") {
      users = std::stoul(value);
    } else if (key == "items") {
      items = std::stoul(value);
    } else if (key == "dim") {
      dim = std::stoul(value);
    } else if (key == "hidden") {
      hidden = std::stoul(value);
    } else {
      throw ValidationError("unknown model header field '" + key + "'");
    }
  }
  LoadedModel out;
  const Backbone backbone = parse_backbone(backbone_text);
  out.model = FactorModel::zeros(backbone, users, items, dim);
  if (backbone == Backbone::kNeural && hidden != dim) {
    throw ValidationError("neural model hidden width must equal dim");
  }
  out.users = IndexMap(read_ids(in, "users", users));
  out.items = IndexMap(read_ids(in, "items", items));
  auto& p = out.model.mutable_params();
  read_block(in, "U", p.user_emb.data(), p.user_emb.rows(), p.user_emb.cols());
  read_block(in, "V", p.item_emb.data(), p.item_emb.rows(), p.item_emb.cols());
  if (backbone == Backbone::kNeural) {
    read_block(in, "hidden_w", p.hidden_w.data(), p.hidden_w.rows(),
               p.hidden_w.cols());
    read_block(in, "hidden_b", p.hidden_b.data(), 1, p.hidden_b.size());
    read_block(in, "out_w", p.out_w.data(), 1, p.out_w.size());
    read_block(in, "out_b", p.out_b.data(), 1, 1);
  }
  return out;
}

void save_loss_trace(std::ostream& out, const std::vector<double>& epoch_loss) {
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out << e << ',' << format_exact(epoch_loss[e]) << '\n';
  }
}

}  // namespace sharecause
