#include "iatforge/pe/fixture.hpp"

#include <cassert>
#include <cstring>

namespace iatforge::pe {

namespace {

class Image {
 public:
  explicit Image(std::size_t size) : bytes_(size, 0) {}

  void put8(std::size_t at, std::uint8_t v) { bytes_.at(at) = v; }
  void put16(std::size_t at, std::uint16_t v) {
    put8(at, static_cast<std::uint8_t>(v));
    put8(at + 1, static_cast<std::uint8_t>(v >> 8));
  }
  void put32(std::size_t at, std::uint32_t v) {
    put16(at, static_cast<std::uint16_t>(v));
    put16(at + 2, static_cast<std::uint16_t>(v >> 16));
  }
  void put64(std::size_t at, std::uint64_t v) {
    put32(at, static_cast<std::uint32_t>(v));
    put32(at + 4, static_cast<std::uint32_t>(v >> 32));
  }
  void put_cstr(std::size_t at, const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) put8(at + i, static_cast<std::uint8_t>(s[i]));
    put8(at + s.size(), 0);
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

struct SectionPlan {
  // All offsets are relative to the section payload start.
  std::size_t descriptors = 0;
  std::vector<std::size_t> oft;        // per DLL
  std::vector<std::size_t> ft;         // per DLL
  std::vector<std::size_t> dll_names;  // per DLL
  std::vector<std::vector<std::size_t>> hint_names;  // per DLL, per named func
  std::size_t export_dir = 0;
  std::size_t addr_of_functions = 0;
  std::size_t addr_of_names = 0;
  std::size_t addr_of_name_ordinals = 0;
  std::size_t export_dll_name = 0;
  std::vector<std::size_t> export_names;
  std::size_t total = 0;
};

SectionPlan plan_section(const FixtureSpec& spec, std::size_t thunk_size) {
  SectionPlan p;
  std::size_t at = 0;
  auto alloc = [&](std::size_t n) {
    std::size_t here = at;
    at += n;
    return here;
  };

  if (spec.import_mode != ImportDirMode::absent) {
    std::size_t descriptor_count = spec.import_mode == ImportDirMode::empty ? 1 : spec.imports.size() + 1;
    p.descriptors = alloc(descriptor_count * 20);
    for (const FixtureDll& dll : spec.imports) {
      p.oft.push_back(alloc((dll.funcs.size() + 1) * thunk_size));
      p.ft.push_back(alloc((dll.funcs.size() + 1) * thunk_size));
    }
    for (const FixtureDll& dll : spec.imports) {
      p.dll_names.push_back(alloc(dll.name.size() + 1));
      std::vector<std::size_t> hn;
      for (const FixtureImport& f : dll.funcs) {
        if (const auto* named = std::get_if<FixtureImport::Name>(&f.func)) {
          hn.push_back(alloc(2 + named->name.size() + 1));
        } else {
          hn.push_back(0);
        }
      }
      p.hint_names.push_back(std::move(hn));
    }
  }

  if (spec.exports) {
    const FixtureExports& e = *spec.exports;
    std::size_t function_count = e.named.size() + e.extra_ordinal_slots;
    p.export_dir = alloc(40);
    p.addr_of_functions = alloc(function_count * 4);
    p.addr_of_names = alloc(e.named.size() * 4);
    p.addr_of_name_ordinals = alloc(e.named.size() * 2);
    p.export_dll_name = alloc(e.dll_name.size() + 1);
    for (const std::string& name : e.named) p.export_names.push_back(alloc(name.size() + 1));
  }

  p.total = at;
  return p;
}

}  // namespace

std::vector<std::uint8_t> build_fixture(const FixtureSpec& spec) {
  const std::size_t thunk_size = spec.pe32_plus ? 8 : 4;
  const SectionPlan plan = plan_section(spec, thunk_size);

  const std::size_t opt_size = spec.pe32_plus ? 0xF0 : 0xE0;
  const std::size_t pe_offset = 0x40;
  const std::size_t coff = pe_offset + 4;
  const std::size_t optional = coff + 20;
  const std::size_t section_hdr = optional + opt_size;
  const std::size_t payload = kFixtureSectionRawOffset;
  const std::size_t file_size = payload + std::max<std::size_t>(plan.total, 1);
  auto rva = [&](std::size_t section_off) {
    return static_cast<std::uint32_t>(kFixtureSectionRva + section_off);
  };

  Image img(file_size);

  // DOS header: "MZ" + e_lfanew.
  img.put16(0, 0x5A4D);
  img.put32(0x3C, static_cast<std::uint32_t>(pe_offset));
  img.put32(pe_offset, 0x00004550);

  // COFF file header.
  img.put16(coff, spec.pe32_plus ? 0x8664 : 0x014C);
  img.put16(coff + 2, 1);  // one section
  img.put16(coff + 16, static_cast<std::uint16_t>(opt_size));
  std::uint16_t characteristics = 0x0002 | 0x0100;  // EXECUTABLE_IMAGE | 32BIT_MACHINE
  if (spec.dll) characteristics |= 0x2000;
  img.put16(coff + 18, characteristics);

  // Optional header.
  img.put16(optional, spec.pe32_plus ? 0x20B : 0x10B);
  if (spec.pe32_plus) {
    img.put64(optional + 24, kFixtureImageBase64);
  } else {
    img.put32(optional + 28, static_cast<std::uint32_t>(kFixtureImageBase32));
  }
  img.put32(optional + 32, 0x1000);  // SectionAlignment
  img.put32(optional + 36, 0x200);   // FileAlignment
  img.put32(optional + 56, 0x2000);  // SizeOfImage
  img.put32(optional + 60, 0x200);   // SizeOfHeaders
  img.put16(optional + 68, 3);       // console subsystem
  const std::size_t dir_count_at = optional + (spec.pe32_plus ? 108 : 92);
  const std::size_t dirs = optional + (spec.pe32_plus ? 112 : 96);
  img.put32(dir_count_at, 16);
  if (spec.exports) {
    std::size_t export_size = plan.total - plan.export_dir;
    img.put32(dirs, rva(plan.export_dir));
    img.put32(dirs + 4, static_cast<std::uint32_t>(export_size));
  }
  if (spec.import_mode != ImportDirMode::absent) {
    std::size_t descriptor_count = spec.import_mode == ImportDirMode::empty ? 1 : spec.imports.size() + 1;
    img.put32(dirs + 8, rva(plan.descriptors));
    img.put32(dirs + 12, static_cast<std::uint32_t>(descriptor_count * 20));
  }

  // Section header: one section covering the whole payload.
  const char* sect_name = ".data";
  for (std::size_t i = 0; sect_name[i] != 0; ++i)
    img.put8(section_hdr + i, static_cast<std::uint8_t>(sect_name[i]));
  img.put32(section_hdr + 8, static_cast<std::uint32_t>(std::max<std::size_t>(plan.total, 1)));
  img.put32(section_hdr + 12, kFixtureSectionRva);
  img.put32(section_hdr + 16, static_cast<std::uint32_t>(std::max<std::size_t>(plan.total, 1)));
  img.put32(section_hdr + 20, static_cast<std::uint32_t>(payload));
  img.put32(section_hdr + 36, 0xC0000040);  // readable | writable | initialized data

  // Import structures.
  if (spec.import_mode == ImportDirMode::populated) {
    for (std::size_t d = 0; d < spec.imports.size(); ++d) {
      const FixtureDll& dll = spec.imports[d];
      std::size_t desc = payload + plan.descriptors + d * 20;
      img.put32(desc, rva(plan.oft[d]));
      img.put32(desc + 12, rva(plan.dll_names[d]));
      img.put32(desc + 16, rva(plan.ft[d]));
      img.put_cstr(payload + plan.dll_names[d], dll.name);

      for (std::size_t t = 0; t < dll.funcs.size(); ++t) {
        std::uint64_t value;
        if (const auto* named = std::get_if<FixtureImport::Name>(&dll.funcs[t].func)) {
          std::size_t ibn = payload + plan.hint_names[d][t];
          img.put16(ibn, named->hint);
          img.put_cstr(ibn + 2, named->name);
          value = rva(plan.hint_names[d][t]);
        } else {
          std::uint16_t ord = std::get<std::uint16_t>(dll.funcs[t].func);
          value = (spec.pe32_plus ? (std::uint64_t{1} << 63) : (std::uint64_t{1} << 31)) | ord;
        }
        std::size_t oft = payload + plan.oft[d] + t * thunk_size;
        std::size_t ft = payload + plan.ft[d] + t * thunk_size;
        if (spec.pe32_plus) {
          img.put64(oft, value);
          img.put64(ft, value);
        } else {
          img.put32(oft, static_cast<std::uint32_t>(value));
          img.put32(ft, static_cast<std::uint32_t>(value));
        }
      }
    }
    // Trailing descriptor and thunk terminators are already zero.
  }

  // Export structures.
  if (spec.exports) {
    const FixtureExports& e = *spec.exports;
    std::size_t function_count = e.named.size() + e.extra_ordinal_slots;
    std::size_t dir = payload + plan.export_dir;
    img.put32(dir + 12, rva(plan.export_dll_name));
    img.put32(dir + 16, e.ordinal_base);
    img.put32(dir + 20, static_cast<std::uint32_t>(function_count));
    img.put32(dir + 24, e.forced_name_count.value_or(static_cast<std::uint32_t>(e.named.size())));
    img.put32(dir + 28, rva(plan.addr_of_functions));
    img.put32(dir + 32, rva(plan.addr_of_names));
    img.put32(dir + 36, rva(plan.addr_of_name_ordinals));
    img.put_cstr(payload + plan.export_dll_name, e.dll_name);

    for (std::size_t slot = 0; slot < function_count; ++slot) {
      img.put32(payload + plan.addr_of_functions + slot * 4, 0x2000 + static_cast<std::uint32_t>(slot));
    }
    for (std::size_t i = 0; i < e.named.size(); ++i) {
      img.put32(payload + plan.addr_of_names + i * 4, rva(plan.export_names[i]));
      img.put16(payload + plan.addr_of_name_ordinals + i * 2, static_cast<std::uint16_t>(i));
      img.put_cstr(payload + plan.export_names[i], e.named[i]);
    }
  }

  return img.take();
}

}  // namespace iatforge::pe
