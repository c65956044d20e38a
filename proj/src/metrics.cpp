#include "sdtrack/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sdtrack/errors.hpp"

namespace sdt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den) { return den > 0.0 ? num / den : kNaN; }

// Dense index for the ids seen on one side of a sequence.
std::map<int, int> index_ids(const std::vector<FrameObjects>& frames) {
    std::map<int, int> ids;
    for (const FrameObjects& f : frames)
        for (const EvalObject& o : f) ids.emplace(o.id, 0);
    int next = 0;
    for (auto& [id, idx] : ids) idx = next++;
    return ids;
}

}  // namespace

std::vector<double> MatchConfig::default_alphas() {
    std::vector<double> a;
    for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
    return a;
}

double MatchConfig::match_cutoff() const { return similarity == SimilarityKind::BBoxIoU ? iou_threshold : 0.5; }

void MatchConfig::validate() const {
    if (!(endpoint_l1_threshold > 0.0)) throw ValidationError("match.endpoint_l1_threshold: must be positive");
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ValidationError("match.iou_threshold: must lie in (0, 1]");
    if (hota_alphas.empty()) throw ValidationError("match.hota_alphas: must not be empty");
    for (double a : hota_alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ValidationError("match.hota_alphas: values must lie in (0, 1)");
    }
}

EvalSequence make_eval_sequence(const SequenceAnnotation& gt, const std::vector<Track>& pred) {
    int frames = gt.frame_count();
    for (const Track& t : pred)
        for (const TrackEntry& e : t.entries) {
            if (e.frame < 1) throw ValidationError("track " + std::to_string(t.id) + ": frame index below 1");
            frames = std::max(frames, e.frame);
        }
    EvalSequence seq;
    seq.gt.resize(static_cast<std::size_t>(frames));
    seq.pred.resize(static_cast<std::size_t>(frames));
    for (int t = 0; t < gt.frame_count(); ++t) {
        for (const AnnotatedObject& o : gt.frames[static_cast<std::size_t>(t)]) {
            seq.gt[static_cast<std::size_t>(t)].push_back({o.track_id, o.endpoints, o.bbox});
        }
    }
    for (const Track& t : pred)
        for (const TrackEntry& e : t.entries) {
            const EndpointPair& ep = e.detection.endpoints;
            seq.pred[static_cast<std::size_t>(e.frame - 1)].push_back({t.id, ep, bbox_from_endpoints(ep)});
        }
    return seq;
}

double similarity(const EvalObject& gt, const EvalObject& pred, const MatchConfig& cfg) {
    if (cfg.similarity == SimilarityKind::BBoxIoU) return iou(gt.box, pred.box);
    const double d = l1_distance(gt.endpoints.left, pred.endpoints.left) +
                     l1_distance(gt.endpoints.right, pred.endpoints.right);
    return std::max(0.0, 1.0 - d / (2.0 * cfg.endpoint_l1_threshold));
}

Matrix similarity_matrix(const FrameObjects& gt, const FrameObjects& pred, const MatchConfig& cfg) {
    Matrix s(static_cast<int>(gt.size()), static_cast<int>(pred.size()));
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j) s(i, j) = similarity(gt[i], pred[j], cfg);
    return s;
}

FrameMatch frame_match(const FrameObjects& gt, const FrameObjects& pred, const MatchConfig& cfg) {
    const Matrix s = similarity_matrix(gt, pred, cfg);
    const std::vector<int> col = max_weight_matching(s, cfg.match_cutoff());
    FrameMatch m;
    for (int i = 0; i < s.rows(); ++i)
        if (col[i] != kUnmatched) m.pairs.emplace_back(i, col[i]);
    m.false_negatives = static_cast<int>(gt.size() - m.pairs.size());
    m.false_positives = static_cast<int>(pred.size() - m.pairs.size());
    return m;
}

ClearCounts& ClearCounts::operator+=(const ClearCounts& o) {
    gt += o.gt;
    matches += o.matches;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    id_switches += o.id_switches;
    return *this;
}

ClearCounts clear_mot_counts(const EvalSequence& seq, const MatchConfig& cfg) {
    if (seq.gt.size() != seq.pred.size()) throw ValidationError("evaluation: gt and prediction frame counts differ");
    const double cutoff = cfg.match_cutoff();
    std::map<int, int> last;  // gt id -> last matched pred id
    ClearCounts c;
    for (std::size_t t = 0; t < seq.gt.size(); ++t) {
        const FrameObjects& gt = seq.gt[t];
        const FrameObjects& pred = seq.pred[t];
        const Matrix s = similarity_matrix(gt, pred, cfg);
        std::vector<bool> gt_used(gt.size()), pred_used(pred.size());
        std::vector<std::pair<int, int>> pairs;

        // Carry forward established correspondences.
        for (std::size_t i = 0; i < gt.size(); ++i) {
            auto it = last.find(gt[i].id);
            if (it == last.end()) continue;
            for (std::size_t j = 0; j < pred.size(); ++j) {
                if (pred_used[j] || pred[j].id != it->second) continue;
                if (s(static_cast<int>(i), static_cast<int>(j)) >= cutoff) {
                    gt_used[i] = pred_used[j] = true;
                    pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
                }
                break;
            }
        }

        // Solve the remainder optimally.
        std::vector<int> rows, cols;
        for (std::size_t i = 0; i < gt.size(); ++i)
            if (!gt_used[i]) rows.push_back(static_cast<int>(i));
        for (std::size_t j = 0; j < pred.size(); ++j)
            if (!pred_used[j]) cols.push_back(static_cast<int>(j));
        Matrix rest(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = 0; b < cols.size(); ++b)
                rest(static_cast<int>(a), static_cast<int>(b)) = s(rows[a], cols[b]);
        const std::vector<int> assign = max_weight_matching(rest, cutoff);
        for (std::size_t a = 0; a < rows.size(); ++a) {
            if (assign[a] == kUnmatched) continue;
            const int i = rows[a];
            const int j = cols[static_cast<std::size_t>(assign[a])];
            auto it = last.find(gt[static_cast<std::size_t>(i)].id);
            if (it != last.end() && it->second != pred[static_cast<std::size_t>(j)].id) ++c.id_switches;
            pairs.emplace_back(i, j);
        }

        for (const auto& [i, j] : pairs) last[gt[static_cast<std::size_t>(i)].id] = pred[static_cast<std::size_t>(j)].id;
        c.gt += static_cast<long>(gt.size());
        c.matches += static_cast<long>(pairs.size());
        c.false_negatives += static_cast<long>(gt.size() - pairs.size());
        c.false_positives += static_cast<long>(pred.size() - pairs.size());
    }
    return c;
}

double mota(const ClearCounts& c) {
    if (c.gt == 0) return kNaN;
    return 1.0 - static_cast<double>(c.false_negatives + c.false_positives + c.id_switches) / static_cast<double>(c.gt);
}

IdCounts& IdCounts::operator+=(const IdCounts& o) {
    idtp += o.idtp;
    gt_detections += o.gt_detections;
    pred_detections += o.pred_detections;
    return *this;
}

IdCounts identity_counts(const EvalSequence& seq, const MatchConfig& cfg) {
    if (seq.gt.size() != seq.pred.size()) throw ValidationError("evaluation: gt and prediction frame counts differ");
    const std::map<int, int> gt_ids = index_ids(seq.gt);
    const std::map<int, int> pred_ids = index_ids(seq.pred);
    Matrix overlap(static_cast<int>(gt_ids.size()), static_cast<int>(pred_ids.size()));
    IdCounts c;
    const double cutoff = cfg.match_cutoff();
    for (std::size_t t = 0; t < seq.gt.size(); ++t) {
        const FrameObjects& gt = seq.gt[t];
        const FrameObjects& pred = seq.pred[t];
        c.gt_detections += static_cast<long>(gt.size());
        c.pred_detections += static_cast<long>(pred.size());
        for (const EvalObject& g : gt)
            for (const EvalObject& p : pred)
                if (similarity(g, p, cfg) >= cutoff) overlap(gt_ids.at(g.id), pred_ids.at(p.id)) += 1.0;
    }
    const std::vector<int> col = max_weight_matching(overlap, 1.0);
    for (int i = 0; i < overlap.rows(); ++i)
        if (col[i] != kUnmatched) c.idtp += static_cast<long>(overlap(i, col[i]));
    return c;
}

double idf1(const IdCounts& c) {
    return ratio(2.0 * static_cast<double>(c.idtp), static_cast<double>(c.gt_detections + c.pred_detections));
}

HotaCounts& HotaCounts::operator+=(const HotaCounts& o) {
    if (alphas.empty()) {
        *this = o;
        return *this;
    }
    if (o.alphas.empty()) return *this;
    if (alphas != o.alphas) throw ValidationError("HOTA counts use different alpha grids");
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        tp[a] += o.tp[a];
        fn[a] += o.fn[a];
        fp[a] += o.fp[a];
        ass_sum[a] += o.ass_sum[a];
    }
    return *this;
}

HotaCounts hota_counts(const EvalSequence& seq, const MatchConfig& cfg) {
    if (seq.gt.size() != seq.pred.size()) throw ValidationError("evaluation: gt and prediction frame counts differ");
    const std::size_t na = cfg.hota_alphas.size();
    HotaCounts c;
    c.alphas = cfg.hota_alphas;
    c.tp.assign(na, 0.0);
    c.fn.assign(na, 0.0);
    c.fp.assign(na, 0.0);
    c.ass_sum.assign(na, 0.0);

    const std::map<int, int> gt_ids = index_ids(seq.gt);
    const std::map<int, int> pred_ids = index_ids(seq.pred);
    const int ng = static_cast<int>(gt_ids.size());
    const int np = static_cast<int>(pred_ids.size());
    std::vector<double> gt_count(static_cast<std::size_t>(ng), 0.0), pred_count(static_cast<std::size_t>(np), 0.0);

    // Soft co-occurrence of every id pair, normalised per frame like an IoU
    // over the similarity matrix.
    std::vector<Matrix> sims(seq.gt.size());
    Matrix potential(ng, np);
    for (std::size_t t = 0; t < seq.gt.size(); ++t) {
        const FrameObjects& gt = seq.gt[t];
        const FrameObjects& pred = seq.pred[t];
        sims[t] = similarity_matrix(gt, pred, cfg);
        const Matrix& s = sims[t];
        std::vector<double> row_sum(gt.size(), 0.0), col_sum(pred.size(), 0.0);
        for (int i = 0; i < s.rows(); ++i)
            for (int j = 0; j < s.cols(); ++j) {
                row_sum[static_cast<std::size_t>(i)] += s(i, j);
                col_sum[static_cast<std::size_t>(j)] += s(i, j);
            }
        for (int i = 0; i < s.rows(); ++i)
            for (int j = 0; j < s.cols(); ++j) {
                const double denom = row_sum[static_cast<std::size_t>(i)] + col_sum[static_cast<std::size_t>(j)] - s(i, j);
                if (denom > std::numeric_limits<double>::epsilon()) {
                    potential(gt_ids.at(gt[static_cast<std::size_t>(i)].id), pred_ids.at(pred[static_cast<std::size_t>(j)].id)) +=
                        s(i, j) / denom;
                }
            }
        for (const EvalObject& o : gt) gt_count[static_cast<std::size_t>(gt_ids.at(o.id))] += 1.0;
        for (const EvalObject& o : pred) pred_count[static_cast<std::size_t>(pred_ids.at(o.id))] += 1.0;
    }
    Matrix alignment(ng, np);
    for (int g = 0; g < ng; ++g)
        for (int p = 0; p < np; ++p) {
            const double pm = potential(g, p);
            const double denom = gt_count[static_cast<std::size_t>(g)] + pred_count[static_cast<std::size_t>(p)] - pm;
            alignment(g, p) = denom > 0.0 ? pm / denom : 0.0;
        }

    std::vector<Matrix> matches(na, Matrix(ng, np));
    for (std::size_t t = 0; t < seq.gt.size(); ++t) {
        const FrameObjects& gt = seq.gt[t];
        const FrameObjects& pred = seq.pred[t];
        const Matrix& s = sims[t];
        Matrix score(s.rows(), s.cols());
        for (int i = 0; i < s.rows(); ++i)
            for (int j = 0; j < s.cols(); ++j)
                score(i, j) = alignment(gt_ids.at(gt[static_cast<std::size_t>(i)].id),
                                        pred_ids.at(pred[static_cast<std::size_t>(j)].id)) *
                              s(i, j);
        const std::vector<int> col = max_weight_matching(score, std::numeric_limits<double>::min());
        for (std::size_t a = 0; a < na; ++a) {
            const double alpha = cfg.hota_alphas[a] - std::numeric_limits<double>::epsilon();
            double hits = 0.0;
            for (int i = 0; i < s.rows(); ++i) {
                if (col[i] == kUnmatched || s(i, col[i]) < alpha) continue;
                hits += 1.0;
                matches[a](gt_ids.at(gt[static_cast<std::size_t>(i)].id),
                           pred_ids.at(pred[static_cast<std::size_t>(col[i])].id)) += 1.0;
            }
            c.tp[a] += hits;
            c.fn[a] += static_cast<double>(gt.size()) - hits;
            c.fp[a] += static_cast<double>(pred.size()) - hits;
        }
    }

    for (std::size_t a = 0; a < na; ++a) {
        for (int g = 0; g < ng; ++g)
            for (int p = 0; p < np; ++p) {
                const double m = matches[a](g, p);
                if (m == 0.0) continue;
                const double ass = m / (gt_count[static_cast<std::size_t>(g)] + pred_count[static_cast<std::size_t>(p)] - m);
                c.ass_sum[a] += m * ass;
            }
    }
    return c;
}

HotaScores hota_scores(const HotaCounts& c) {
    HotaScores s;
    const std::size_t na = c.alphas.size();
    if (na == 0) {
        s.mean_hota = s.mean_deta = s.mean_assa = kNaN;
        return s;
    }
    for (std::size_t a = 0; a < na; ++a) {
        const double deta = ratio(c.tp[a], c.tp[a] + c.fn[a] + c.fp[a]);
        // No true positives: association is undefined but cannot lift HOTA.
        const double assa = c.tp[a] > 0.0 ? c.ass_sum[a] / c.tp[a] : (std::isnan(deta) ? kNaN : 0.0);
        s.deta.push_back(deta);
        s.assa.push_back(assa);
        s.hota.push_back(std::sqrt(deta * assa));
    }
    auto mean = [](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) sum += x;
        return sum / static_cast<double>(v.size());
    };
    s.mean_hota = mean(s.hota);
    s.mean_deta = mean(s.deta);
    s.mean_assa = mean(s.assa);
    return s;
}

SequenceCounts& SequenceCounts::operator+=(const SequenceCounts& o) {
    clear += o.clear;
    id += o.id;
    hota += o.hota;
    return *this;
}

SequenceCounts count_sequence(const EvalSequence& seq, const MatchConfig& cfg) {
    return {clear_mot_counts(seq, cfg), identity_counts(seq, cfg), hota_counts(seq, cfg)};
}

MetricSummary summarize(const SequenceCounts& c) {
    MetricSummary m;
    m.mota = mota(c.clear);
    m.idf1 = idf1(c.id);
    m.ids = c.clear.id_switches;
    const HotaScores h = hota_scores(c.hota);
    m.hota = h.mean_hota;
    m.deta = h.mean_deta;
    m.assa = h.mean_assa;
    m.tp = c.clear.matches;
    m.fp = c.clear.false_positives;
    m.fn = c.clear.false_negatives;
    m.gt = c.clear.gt;
    return m;
}

EvalReport evaluate_sequences(std::vector<std::pair<std::string, EvalSequence>> sequences, const MatchConfig& cfg,
                              int threads) {
    cfg.validate();
    std::sort(sequences.begin(), sequences.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<SequenceCounts> counts(sequences.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < sequences.size(); i = next++) {
            counts[i] = count_sequence(sequences[i].second, cfg);
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(sequences.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    EvalReport report;
    SequenceCounts total;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        const MetricSummary m = summarize(counts[i]);
        if (counts[i].clear.gt == 0) report.warnings.push_back(sequences[i].first + ": no ground-truth objects, MOTA undefined");
        report.sequences.emplace_back(sequences[i].first, m);
        total += counts[i];
    }
    report.aggregate = summarize(total);
    return report;
}

namespace {

nlohmann::json summary_json(const MetricSummary& m) {
    // NaN becomes null in the output.
    auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    return {{"MOTA", num(m.mota)}, {"IDF1", num(m.idf1)}, {"IDS", m.ids},   {"HOTA", num(m.hota)},
            {"DetA", num(m.deta)}, {"AssA", num(m.assa)}, {"TP", m.tp},    {"FP", m.fp},
            {"FN", m.fn},          {"GT", m.gt}};
}

std::string percent(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

}  // namespace

std::string report_json(const EvalReport& report, const MatchConfig& cfg) {
    nlohmann::json j;
    j["config"] = {{"similarity", cfg.similarity == SimilarityKind::BBoxIoU ? "bbox_iou" : "endpoint_l1"},
                   {"endpoint_l1_threshold", cfg.endpoint_l1_threshold},
                   {"iou_threshold", cfg.iou_threshold},
                   {"hota_alphas", cfg.hota_alphas}};
    j["aggregate"] = summary_json(report.aggregate);
    nlohmann::json seqs = nlohmann::json::array();
    for (const auto& [name, m] : report.sequences) {
        nlohmann::json s = summary_json(m);
        s["sequence"] = name;
        seqs.push_back(std::move(s));
    }
    j["sequences"] = std::move(seqs);
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
    std::size_t name_width = 9;
    for (const auto& s : report.sequences) name_width = std::max(name_width, s.first.size());
    std::ostringstream out;
    char line[256];
    auto row = [&](const std::string& name, const MetricSummary& m) {
        std::snprintf(line, sizeof line, "%-*s %7s %7s %6ld %7s %7s %7s\n", static_cast<int>(name_width), name.c_str(),
                      percent(m.idf1).c_str(), percent(m.mota).c_str(), m.ids, percent(m.hota).c_str(),
                      percent(m.deta).c_str(), percent(m.assa).c_str());
        out << line;
    };
    std::snprintf(line, sizeof line, "%-*s %7s %7s %6s %7s %7s %7s\n", static_cast<int>(name_width), "sequence", "IDF1",
                  "MOTA", "IDS", "HOTA", "DetA", "AssA");
    out << line;
    for (const auto& [name, m] : report.sequences) row(name, m);
    row("aggregate", report.aggregate);
    return out.str();
}

}  // namespace sdt
