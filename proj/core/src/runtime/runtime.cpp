#include "ssdtee/runtime/runtime.hpp"

#include "ssdtee/error.hpp"

#include <algorithm>

namespace ssdtee::runtime {

namespace {
constexpr std::uint32_t kPage = 4096;
constexpr std::uint32_t kLine = 64;
constexpr std::uint64_t kMetadataBytes = 4096;
} // namespace

const char* to_string(TeeState s) noexcept {
    switch (s) {
    case TeeState::Creating: return "creating";
    case TeeState::Ready: return "ready";
    case TeeState::Running: return "running";
    case TeeState::Paused: return "paused";
    case TeeState::Aborted: return "aborted";
    case TeeState::Terminated: return "terminated";
    }
    return "?";
}

const char* to_string(AbortCause c) noexcept {
    switch (c) {
    case AbortCause::AccessControlViolated: return "access-control";
    case AbortCause::MetadataCorrupted: return "metadata-corrupted";
    case AbortCause::ProgramException: return "program-exception";
    }
    return "?";
}

bool transition_allowed(TeeState from, TeeState to) noexcept {
    switch (from) {
    case TeeState::Creating: return to == TeeState::Ready;
    case TeeState::Ready: return to == TeeState::Running;
    case TeeState::Running:
        return to == TeeState::Paused || to == TeeState::Aborted || to == TeeState::Terminated;
    case TeeState::Paused: return to == TeeState::Running || to == TeeState::Aborted;
    case TeeState::Aborted:
    case TeeState::Terminated: return false;
    }
    return false;
}

void RuntimeConfig::validate() const {
    regions.validate();
    cipher.validate();
    if (storage_cores == 0 || prefetch_window == 0) {
        throw ConfigError("runtime needs at least one storage core and a nonzero prefetch window");
    }
    if (heap_bytes == 0 || heap_bytes % kPage != 0) {
        throw ConfigError("TEE heap must be a positive multiple of 4 KiB");
    }
    if (dram_line_ns == 0) {
        throw ConfigError("dram_line_ns must be positive");
    }
}

struct Runtime::Exec {
    std::uint64_t gen = 0;
    WorkloadBinding bin;
    std::unique_ptr<workloads::Reducer> reducer;
    TidCallback on_done;
    std::uint64_t next = 0;
    std::uint64_t inflight = 0;
    std::uint64_t done = 0;
    std::uint64_t flushes_outstanding = 0;
    std::uint64_t next_output = 0;
    bool blocked = false;
    bool started = false;
    bool terminating = false;
    bool notified = false;
    bool corrupt = false;
    std::optional<std::uint64_t> fault_at;
    std::deque<std::uint32_t> free_slots;
    std::vector<bool> ring_registered;
    std::vector<bool> heap_registered;
    std::vector<std::vector<std::uint8_t>> ring_data;
};

Runtime::Runtime(sim::Kernel& kernel, ftl::Ftl& ftl, secmem::SecureMemory* secure_memory, RuntimeConfig config)
    : kernel_(kernel), ftl_(ftl), flash_(ftl.flash()), secmem_(secure_memory), config_(config),
      regions_(config.regions), normal_(regions_.normal()), secure_(regions_.secure()),
      ivs_(sim::Rng::mix(config.key_seed ^ 0x1f)),
      engine_(cipher::CipherKey::derive(config.key_seed), ivs_, config.cipher), id_used_(256, false) {
    config_.validate();
    if (config_.secure && secmem_ == nullptr) {
        throw ConfigError("secure runtime needs a secure memory model");
    }
    id_used_[0] = true; // the FTL
    for (std::uint32_t c = 0; c < flash_.geometry().channels; ++c) {
        cipher_units_.emplace_back("cipher" + std::to_string(c));
    }
    core_busy_.assign(config_.storage_cores, false);
    core_since_.assign(config_.storage_cores, 0);
}

Runtime::~Runtime() = default;

TeeDescriptor& Runtime::desc(std::uint32_t tid) {
    auto it = tees_.find(tid);
    if (it == tees_.end()) {
        throw InvalidState("no TEE with tid " + std::to_string(tid));
    }
    return it->second;
}

const TeeDescriptor& Runtime::tee(std::uint32_t tid) const {
    auto it = tees_.find(tid);
    if (it == tees_.end()) {
        throw InvalidState("no TEE with tid " + std::to_string(tid));
    }
    return it->second;
}

std::vector<std::uint32_t> Runtime::tids() const {
    std::vector<std::uint32_t> v;
    for (const auto& [tid, d] : tees_) {
        v.push_back(tid);
    }
    return v;
}

Runtime::Exec& Runtime::exec(std::uint32_t tid) { return *execs_.at(tid); }

void Runtime::set_state(TeeDescriptor& d, TeeState s) {
    if (!transition_allowed(d.state, s)) {
        throw InvalidState("tee " + std::to_string(d.tid) + ": " + to_string(d.state) + " -> " + to_string(s));
    }
    d.state = s;
    d.history.push_back(s);
    log_state(d);
}

void Runtime::log_state(const TeeDescriptor& d) {
    if (trace_ != nullptr) {
        *trace_ << kernel_.now() << " tee " << d.tid << ' ' << to_string(d.state) << '\n';
    }
}

bool Runtime::live(std::uint32_t tid) const {
    auto it = tees_.find(tid);
    return it != tees_.end() && (it->second.state == TeeState::Running || it->second.state == TeeState::Paused);
}

std::uint64_t Runtime::live_tee_bytes() const noexcept {
    std::uint64_t n = 0;
    for (const auto& [tid, d] : tees_) {
        if (d.state != TeeState::Aborted && d.state != TeeState::Terminated) {
            n += d.program.size() + d.heap.size() + d.ring.size();
        }
    }
    return n;
}

TeeId Runtime::allocate_id() {
    for (std::uint32_t i = 1; i < id_used_.size(); ++i) {
        if (!id_used_[i]) {
            id_used_[i] = true;
            return TeeId{static_cast<std::uint8_t>(i)};
        }
    }
    throw CreateFailed("all TEE identifiers are in use");
}

std::uint64_t Runtime::ring_page(const TeeDescriptor& d, std::uint32_t slot) const { return d.ring.begin / kPage + slot; }
std::uint64_t Runtime::heap_page(const TeeDescriptor& d, std::uint32_t page) const { return d.heap.begin / kPage + page; }

// ---- lifecycle ----

std::uint32_t Runtime::offload_code(OffloadRequest req, TidCallback on_ready) {
    if (auto it = tees_.find(req.tid); it != tees_.end()) {
        const TeeDescriptor& old = it->second;
        const bool reusable =
            old.state == TeeState::Aborted || (old.state == TeeState::Terminated && old.retrieved);
        if (!reusable) {
            throw TidInUse("tid " + std::to_string(req.tid) + " is in use");
        }
    }
    if (req.bin.spec == nullptr || req.bin.dataset == nullptr || !req.bin.trace) {
        throw ConfigError("offload request without a workload binding");
    }
    if (req.lpa.empty() && !req.bin.trace->records.empty()) {
        throw ConfigError("data-processing program without input pages");
    }
    if (req.bin.trace->heap_pages * std::uint64_t{kPage} > config_.heap_bytes) {
        throw ConfigError("trace addresses more heap than a TEE is given");
    }

    TeeDescriptor d;
    d.tid = req.tid;
    d.program_bytes = req.program_bytes;
    d.history.push_back(TeeState::Creating);
    auto program = normal_.allocate(req.program_bytes);
    auto heap = program ? normal_.allocate(config_.heap_bytes) : std::nullopt;
    auto ring = heap ? normal_.allocate(std::uint64_t{config_.prefetch_window} * kPage) : std::nullopt;
    auto meta = ring ? secure_.allocate(kMetadataBytes) : std::nullopt;
    if (!meta) {
        for (auto* r : {&program, &heap, &ring}) {
            if (*r) {
                normal_.release(**r);
            }
        }
        throw CreateFailed("not enough normal-region memory for tid " + std::to_string(req.tid));
    }
    d.program = *program;
    d.heap = *heap;
    d.ring = *ring;
    d.metadata = *meta;
    try {
        d.id = config_.secure ? allocate_id() : kFtlTeeId;
    } catch (...) {
        for (const auto& r : {d.program, d.heap, d.ring}) {
            normal_.release(r);
        }
        secure_.release(d.metadata);
        throw;
    }

    if (config_.secure) {
        const auto in = ftl_.set_id_bits(req.lpa, d.id, true);
        const auto out = in.conflicts.empty() ? ftl_.set_id_bits(req.output_lpa, d.id, false) : ftl::SetIdResult{};
        if (!in.conflicts.empty() || !out.conflicts.empty()) {
            ftl_.clear_id_bits(req.lpa, d.id);
            ftl_.clear_id_bits(req.output_lpa, d.id);
            for (const auto& r : {d.program, d.heap, d.ring}) {
                normal_.release(r);
            }
            secure_.release(d.metadata);
            id_used_[d.id.value] = false;
            const auto& c = in.conflicts.empty() ? out.conflicts.front() : in.conflicts.front();
            throw PermissionDenied("lpa " + std::to_string(c.lpa.value) + " belongs to tee " +
                                   std::to_string(c.owner.value));
        }
    }
    d.lpa_grant = std::move(req.lpa);
    d.output_grant = std::move(req.output_lpa);
    d.offloaded_at = kernel_.now();

    auto e = std::make_unique<Exec>();
    e->gen = ++next_gen_;
    e->bin = req.bin;
    const std::uint32_t tid = req.tid;
    tees_[tid] = std::move(d);
    log_state(tees_[tid]);
    execs_[tid] = std::move(e);

    const Duration xfer = transfer_ns(req.program_bytes, flash_.latency().host_link_bw_bytes_per_s);
    const SimTime sent = host_link_.acquire(kernel_.now(), xfer) + xfer;
    kernel_.schedule(sent, sim::EventKind::HostLinkDone, tid, [this, tid, on_ready = std::move(on_ready)]() mutable {
        auto become_ready = [this, tid, on_ready = std::move(on_ready)] {
            TeeDescriptor& td = desc(tid);
            set_state(td, TeeState::Ready);
            td.ready_at = kernel_.now();
            if (on_ready) {
                on_ready(tid);
            }
        };
        if (!config_.secure) {
            become_ready();
            return;
        }
        TeeDescriptor& td = desc(tid);
        ++td.counters.lifecycle_switches;
        ++td.counters.world_switches;
        const Duration create = flash_.latency().tee_create_ns;
        const SimTime created = monitor_.acquire(kernel_.now(), create) + create;
        kernel_.schedule(created, sim::EventKind::TeeLifecycle, tid, std::move(become_ready));
    });
    return tid;
}

void Runtime::run_tee(std::uint32_t tid, TidCallback on_done) {
    TeeDescriptor& d = desc(tid);
    if (d.state != TeeState::Ready) {
        throw InvalidState("run_tee needs a Ready TEE, tid " + std::to_string(tid) + " is " + to_string(d.state));
    }
    Exec& e = exec(tid);
    set_state(d, TeeState::Running);
    d.started_at = kernel_.now();
    e.started = true;
    e.on_done = std::move(on_done);
    e.reducer = workloads::make_reducer(*e.bin.spec, *e.bin.dataset);
    for (std::uint32_t s = 0; s < config_.prefetch_window; ++s) {
        e.free_slots.push_back(s);
    }
    e.ring_registered.assign(config_.prefetch_window, false);
    e.heap_registered.assign(config_.heap_bytes / kPage, false);
    if (!config_.secure && flash_.faithful()) {
        e.ring_data.assign(config_.prefetch_window, {});
    }
    if (config_.secure) {
        ivs_.roll_epoch();
    }
    pump(tid);
    maybe_complete(tid);
}

void Runtime::release_secure_pages(TeeDescriptor& d, Exec& e) {
    if (secmem_ != nullptr) {
        for (std::uint32_t s = 0; s < e.ring_registered.size(); ++s) {
            if (e.ring_registered[s]) {
                secmem_->release_page(ring_page(d, s));
            }
        }
        for (std::uint32_t p = 0; p < e.heap_registered.size(); ++p) {
            if (e.heap_registered[p]) {
                secmem_->release_page(heap_page(d, p));
            }
        }
    }
    e.ring_registered.clear();
    e.heap_registered.clear();
}

void Runtime::release_resources(TeeDescriptor& d) {
    if (auto it = execs_.find(d.tid); it != execs_.end()) {
        release_secure_pages(d, *it->second);
        it->second->reducer.reset();
        it->second->ring_data.clear();
        it->second->free_slots.clear();
    }
    for (const auto& r : {d.program, d.heap, d.ring}) {
        normal_.release(r);
    }
    d.program = d.heap = d.ring = ByteRange{};
    if (config_.secure) {
        ftl_.clear_id_bits(d.lpa_grant, d.id);
        ftl_.clear_id_bits(d.output_grant, d.id);
        id_used_[d.id.value] = false;
    }
}

void Runtime::throw_out_tee(std::uint32_t tid, AbortCause cause) {
    TeeDescriptor& d = desc(tid);
    if (d.state != TeeState::Running && d.state != TeeState::Paused) {
        throw InvalidState("throw_out_tee on tid " + std::to_string(tid) + " in state " + to_string(d.state));
    }
    Exec& e = exec(tid);
    set_state(d, TeeState::Aborted);
    d.abort_cause = cause;
    d.result.reset();
    d.ended_at = kernel_.now();
    release_resources(d);
    secure_.release(d.metadata);
    d.metadata = ByteRange{};
    if (!e.notified) {
        e.notified = true;
        if (e.on_done) {
            e.on_done(tid);
        }
    }
}

void Runtime::terminate_tee(std::uint32_t tid, TidCallback on_done) {
    TeeDescriptor& d = desc(tid);
    Exec& e = exec(tid);
    if (d.state != TeeState::Running || !d.completed || e.terminating) {
        throw InvalidState("terminate_tee on tid " + std::to_string(tid) + " in state " + to_string(d.state));
    }
    e.terminating = true;
    const std::uint64_t gen = e.gen;
    auto finish = [this, tid, gen, on_done = std::move(on_done)] {
        TeeDescriptor& td = desc(tid);
        Exec& te = exec(tid);
        if (te.gen != gen || td.state != TeeState::Running) {
            return;
        }
        // The result moves into the TEE's metadata block in the secure region.
        const std::uint64_t bytes = td.result ? td.result->size() : 0;
        if (bytes > td.metadata.size()) {
            if (auto bigger = secure_.allocate(bytes)) {
                secure_.release(td.metadata);
                td.metadata = *bigger;
            }
        }
        if (config_.secure) {
            ++td.counters.lifecycle_switches;
            ++td.counters.world_switches;
        }
        set_state(td, TeeState::Terminated);
        td.ended_at = kernel_.now();
        release_resources(td);
        if (on_done) {
            on_done(tid);
        }
    };
    if (!config_.secure) {
        kernel_.schedule_after(0, sim::EventKind::TeeLifecycle, tid, std::move(finish));
        return;
    }
    const Duration del = flash_.latency().tee_delete_ns;
    const SimTime t = monitor_.acquire(kernel_.now(), del) + del;
    kernel_.schedule(t, sim::EventKind::TeeLifecycle, tid, std::move(finish));
}

void Runtime::get_result(std::uint32_t tid, ResultCallback done) {
    TeeDescriptor& d = desc(tid);
    if (d.state != TeeState::Terminated) {
        throw NotReady("tid " + std::to_string(tid) + " is " + to_string(d.state));
    }
    if (d.retrieved) {
        throw AlreadyRetrieved("result of tid " + std::to_string(tid) + " was already returned");
    }
    d.retrieved = true;
    const std::uint64_t bytes = d.result ? d.result->size() : 0;
    const Duration xfer = transfer_ns(bytes, flash_.latency().host_link_bw_bytes_per_s);
    const SimTime t = host_link_.acquire(kernel_.now(), xfer) + xfer;
    kernel_.schedule(t, sim::EventKind::HostLinkDone, tid, [this, tid, t, done = std::move(done)] {
        TeeDescriptor& td = desc(tid);
        secure_.release(td.metadata);
        td.metadata = ByteRange{};
        if (done) {
            static const std::vector<std::uint8_t> empty;
            done(t, td.result ? *td.result : empty);
        }
    });
}

void Runtime::submit(OffloadRequest req, ResultCallback done) {
    auto shared_done = std::make_shared<ResultCallback>(std::move(done));
    offload_code(std::move(req), [this, shared_done](std::uint32_t tid) {
        run_tee(tid, [this, shared_done](std::uint32_t t) {
            if (desc(t).state == TeeState::Aborted) {
                return;
            }
            terminate_tee(t, [this, shared_done](std::uint32_t t2) { get_result(t2, *shared_done); });
        });
    });
}

void Runtime::corrupt_metadata(std::uint32_t tid) {
    TeeDescriptor& d = desc(tid);
    Exec& e = exec(tid);
    e.corrupt = true;
    if (secmem_ != nullptr && secmem_->config().functional) {
        for (std::uint32_t s = 0; s < e.ring_registered.size(); ++s) {
            if (e.ring_registered[s]) {
                const auto [tree, leaf] = secmem_->counter_leaf(ring_page(d, s));
                secmem_->flip_counter_bit(tree, leaf, 1);
                e.corrupt = false; // the real tamper is caught by the tree
                return;
            }
        }
    }
}

void Runtime::inject_exception(std::uint32_t tid, std::uint64_t record) { exec(tid).fault_at = record; }

void Runtime::abort_from_pipeline(std::uint32_t tid, AbortCause cause) {
    if (live(tid)) {
        throw_out_tee(tid, cause);
    }
}

// ---- pipeline ----

void Runtime::pump(std::uint32_t tid) {
    if (!live(tid)) {
        return;
    }
    TeeDescriptor& d = desc(tid);
    Exec& e = exec(tid);
    const auto& records = e.bin.trace->records;
    while (!e.blocked && e.next < records.size() && !e.free_slots.empty()) {
        const std::uint64_t r = e.next;
        if (e.fault_at && *e.fault_at == r) {
            abort_from_pipeline(tid, AbortCause::ProgramException);
            return;
        }
        const Lpa lpa = e.bin.dataset->lpa(records[r].page);
        ftl::Translation t;
        try {
            t = ftl_.translate(lpa, config_.secure ? d.id : kFtlTeeId);
        } catch (const PermissionDenied&) {
            ++d.counters.translations;
            abort_from_pipeline(tid, AbortCause::AccessControlViolated);
            return;
        } catch (const UnmappedLpa&) {
            ++d.counters.translations;
            abort_from_pipeline(tid, AbortCause::ProgramException);
            return;
        }
        ++d.counters.translations;
        if (ftl_.entry(lpa).tee_id() != (config_.secure ? d.id : kFtlTeeId)) {
            ++stats_.cross_tee_reads;
        }
        const std::uint32_t slot = e.free_slots.front();
        e.free_slots.pop_front();
        ++e.inflight;
        ++e.next;
        if (t.from == ftl::ServicedFrom::Cache) {
            issue(tid, r, slot, t.ppa, t.latency);
            continue;
        }
        // Mapping miss: the secure world fetches the mapping page.
        ++d.counters.mapping_misses;
        e.blocked = true;
        Duration ws = 0;
        if (config_.secure) {
            d.counters.world_switches += 2;
            set_state(d, TeeState::Paused);
            ws = flash_.latency().world_switch_ns;
        }
        const std::uint64_t gen = e.gen;
        const std::uint64_t die = ftl_.frame_die(t.frame);
        const Ppa ppa = t.ppa;
        kernel_.schedule_after(ws, sim::EventKind::MappingMiss, tid, [this, tid, gen, die, ws, r, slot, ppa] {
            if (!live(tid) || exec(tid).gen != gen) {
                return;
            }
            flash_.read_metadata(die, [this, tid, gen, ws, r, slot, ppa](SimTime) {
                if (!live(tid) || exec(tid).gen != gen) {
                    return;
                }
                kernel_.schedule_after(ws, sim::EventKind::WorldSwitch, tid, [this, tid, gen, r, slot, ppa] {
                    if (!live(tid) || exec(tid).gen != gen) {
                        return;
                    }
                    TeeDescriptor& td = desc(tid);
                    if (td.state == TeeState::Paused) {
                        set_state(td, TeeState::Running);
                    }
                    exec(tid).blocked = false;
                    issue(tid, r, slot, ppa, 0);
                    pump(tid);
                });
            });
        });
        return;
    }
}

void Runtime::issue(std::uint32_t tid, std::uint64_t record, std::uint32_t slot, Ppa ppa, Duration delay) {
    const std::uint64_t gen = exec(tid).gen;
    auto read = [this, tid, gen, record, slot, ppa] {
        if (!live(tid) || exec(tid).gen != gen) {
            ++stats_.dropped_events;
            return;
        }
        flash_.read_page(ppa, [this, tid, gen, record, slot, ppa](SimTime, const flash::PageData& data) {
            if (!live(tid) || exec(tid).gen != gen) {
                ++stats_.dropped_events;
                return;
            }
            page_arrived(tid, record, slot, ppa, data);
        });
    };
    if (delay == 0) {
        read();
    } else {
        kernel_.schedule_after(delay, sim::EventKind::TranslateIssue, tid, std::move(read));
    }
}

void Runtime::page_arrived(std::uint32_t tid, std::uint64_t record, std::uint32_t slot, Ppa ppa,
                           const flash::PageData& data) {
    Exec& e = exec(tid);
    const auto& rec = e.bin.trace->records[record];
    if (!flash_.faithful() && data.digest != e.bin.dataset->tag(rec.page)) {
        throw Error("flash returned unexpected content for lpa " + std::to_string(e.bin.dataset->lpa(rec.page).value));
    }
    if (!config_.secure) {
        if (flash_.faithful()) {
            e.ring_data[slot] = data.bytes;
        }
        ready_.push_back(Job{tid, record, slot});
        dispatch();
        return;
    }
    const std::uint32_t channel = flash_.codec().channel_of(ppa);
    const Duration ks = engine_.timing().latency_ns(kPage);
    const SimTime done = cipher_units_[channel].acquire(kernel_.now(), ks) + ks;
    const std::uint64_t gen = e.gen;
    std::vector<std::uint8_t> payload = flash_.faithful() ? data.bytes : std::vector<std::uint8_t>{};
    kernel_.schedule(done, sim::EventKind::CipherDone, channel,
                     [this, tid, gen, record, slot, ppa, payload = std::move(payload)] {
                         if (!live(tid) || exec(tid).gen != gen) {
                             ++stats_.dropped_events;
                             return;
                         }
                         TeeDescriptor& d = desc(tid);
                         Exec& ex = exec(tid);
                         std::vector<std::uint8_t> plain;
                         if (!payload.empty()) {
                             // Keystream XOR on the way in, undone inside the TEE.
                             const auto enc = engine_.encrypt_page(ppa, payload);
                             plain = engine_.decrypt_page(enc.iv, enc.ciphertext);
                         } else {
                             (void)ivs_.next_iv(ppa);
                         }
                         const std::uint64_t page = ring_page(d, slot);
                         try {
                             if (ex.corrupt) {
                                 throw IntegrityViolation("injected metadata corruption");
                             }
                             if (!ex.ring_registered[slot]) {
                                 secmem_->register_page(page, secmem::PageClass::ReadOnly);
                                 ex.ring_registered[slot] = true;
                             }
                             secmem_->load_page(page, plain);
                         } catch (const IntegrityViolation&) {
                             abort_from_pipeline(tid, AbortCause::MetadataCorrupted);
                             return;
                         }
                         ++d.counters.pages_loaded;
                         ready_.push_back(Job{tid, record, slot});
                         dispatch();
                     });
}

void Runtime::dispatch() {
    for (std::uint32_t c = 0; c < core_busy_.size() && !ready_.empty(); ++c) {
        while (!core_busy_[c] && !ready_.empty()) {
            const Job job = ready_.front();
            ready_.pop_front();
            if (!live(job.tid)) {
                ++stats_.dropped_events;
                continue;
            }
            start_record(c, job);
        }
    }
}

std::optional<SimTime> Runtime::memory_access(std::uint32_t tid, std::uint64_t dram_page, std::uint32_t line,
                                              std::uint32_t lines, bool write, std::span<std::uint8_t> out) {
    const Duration hold = std::uint64_t{lines} * config_.dram_line_ns;
    const Duration dram = flash_.latency().dram_access_ns;
    Duration latency = dram;
    if (config_.secure) {
        TeeDescriptor& d = desc(tid);
        const std::uint64_t addr = dram_page * kPage + std::uint64_t{line} * kLine;
        const std::uint32_t bytes = lines * kLine;
        try {
            if (exec(tid).corrupt) {
                throw IntegrityViolation("injected metadata corruption");
            }
            const auto r = write ? secmem_->secure_write(addr, bytes) : secmem_->secure_read(addr, bytes, out);
            latency = r.latency;
        } catch (const IntegrityViolation&) {
            abort_from_pipeline(tid, AbortCause::MetadataCorrupted);
            return std::nullopt;
        }
        ++(write ? d.counters.secure_writes : d.counters.secure_reads);
    }
    stats_.memory_ns += dram + hold;
    const SimTime grant = dram_port_.acquire(kernel_.now(), hold);
    return grant + hold + latency;
}

void Runtime::start_record(std::uint32_t core, Job job) {
    core_busy_[core] = true;
    core_since_[core] = kernel_.now();
    TeeDescriptor& d = desc(job.tid);
    Exec& e = exec(job.tid);
    const auto& rec = e.bin.trace->records[job.record];
    std::vector<std::uint8_t> page(kPage);
    const bool faithful = flash_.faithful();
    const auto done = memory_access(job.tid, ring_page(d, job.slot), 0, kPage / kLine, false,
                                    faithful && config_.secure ? std::span<std::uint8_t>(page)
                                                               : std::span<std::uint8_t>{});
    if (!done) {
        stats_.core_busy_ns += kernel_.now() - core_since_[core];
        core_busy_[core] = false;
        dispatch();
        return;
    }
    if (faithful && !config_.secure) {
        page = e.ring_data[job.slot];
    } else if (!faithful) {
        e.bin.dataset->fill_page(rec.page, page);
    }
    e.reducer->consume(rec.page, page);
    stats_.compute_ns += rec.compute_ns;
    kernel_.schedule(*done + rec.compute_ns, sim::EventKind::CoreDone, core, [this, core, job] { step(core, job, 0); });
}

void Runtime::step(std::uint32_t core, Job job, std::uint32_t k) {
    if (!live(job.tid)) {
        ++stats_.dropped_events;
        stats_.core_busy_ns += kernel_.now() - core_since_[core];
        core_busy_[core] = false;
        dispatch();
        return;
    }
    TeeDescriptor& d = desc(job.tid);
    Exec& e = exec(job.tid);
    const auto& rec = e.bin.trace->records[job.record];
    if (k == rec.op_count) {
        finish_record(core, job);
        return;
    }
    const workloads::HeapOp& op = e.bin.trace->ops[rec.first_op + k];
    const std::uint64_t page = heap_page(d, op.page);
    if (config_.secure && !e.heap_registered[op.page]) {
        secmem_->register_page(page, secmem::PageClass::Writable);
        e.heap_registered[op.page] = true;
    }
    std::optional<SimTime> done;
    if (op.kind == workloads::HeapOpKind::Flush) {
        if (d.output_grant.empty()) {
            abort_from_pipeline(job.tid, AbortCause::ProgramException);
            step(core, job, k);
            return;
        }
        std::vector<std::uint8_t> buf(flash_.faithful() && config_.secure ? kPage : 0);
        done = memory_access(job.tid, page, 0, kPage / kLine, false, buf);
        if (done) {
            const Lpa out = d.output_grant[e.next_output++ % d.output_grant.size()];
            flash::PageData data;
            if (flash_.faithful()) {
                data.bytes = buf.empty() ? std::vector<std::uint8_t>(kPage, 0) : std::move(buf);
            } else {
                data.digest = sim::Rng::mix(std::uint64_t{job.tid} << 32 ^ op.page ^ e.next_output);
            }
            ++e.flushes_outstanding;
            ++d.counters.flushes;
            const std::uint64_t gen = e.gen;
            try {
                ftl_.write_lpa(out, std::move(data), config_.secure ? d.id : kFtlTeeId,
                               [this, tid = job.tid, gen](SimTime) {
                                   auto it = execs_.find(tid);
                                   if (it == execs_.end() || it->second->gen != gen) {
                                       return;
                                   }
                                   --it->second->flushes_outstanding;
                                   maybe_complete(tid);
                               });
            } catch (const PermissionDenied&) {
                --e.flushes_outstanding;
                abort_from_pipeline(job.tid, AbortCause::AccessControlViolated);
                step(core, job, k);
                return;
            }
        }
    } else {
        done = memory_access(job.tid, page, op.line, op.lines, op.kind == workloads::HeapOpKind::Write);
    }
    if (!done) {
        step(core, job, k); // releases the core
        return;
    }
    kernel_.schedule(*done, sim::EventKind::CoreDone, core, [this, core, job, k] { step(core, job, k + 1); });
}

void Runtime::finish_record(std::uint32_t core, Job job) {
    stats_.core_busy_ns += kernel_.now() - core_since_[core];
    core_busy_[core] = false;
    ++stats_.records;
    TeeDescriptor& d = desc(job.tid);
    Exec& e = exec(job.tid);
    ++d.counters.records_done;
    --e.inflight;
    ++e.done;
    e.free_slots.push_back(job.slot);
    maybe_complete(job.tid);
    pump(job.tid);
    dispatch();
}

void Runtime::maybe_complete(std::uint32_t tid) {
    if (!live(tid)) {
        return;
    }
    TeeDescriptor& d = desc(tid);
    Exec& e = exec(tid);
    if (d.completed || e.done != e.bin.trace->records.size() || e.flushes_outstanding != 0) {
        return;
    }
    d.completed = true;
    d.finished_at = kernel_.now();
    d.result = e.reducer->finish();
    if (!e.notified) {
        e.notified = true;
        if (e.on_done) {
            e.on_done(tid);
        }
    }
}

} // namespace ssdtee::runtime
