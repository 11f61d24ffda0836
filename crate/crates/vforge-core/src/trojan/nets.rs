use alloc::format;
use alloc::string::String;

use crate::isa::{Opcode, OPCODE_COUNT};

/// Number of traced microarchitectural nets.
pub const NET_COUNT: usize = 120;

pub(crate) const OPC_BASE: usize = 0;
pub(crate) const RD_BASE: usize = OPC_BASE + OPCODE_COUNT; // 19, 4 nets
pub(crate) const RS1_BASE: usize = RD_BASE + 4; // 23
pub(crate) const RS2_BASE: usize = RS1_BASE + 4; // 27
pub(crate) const IMM_BASE: usize = RS2_BASE + 4; // 31, 32 nets
pub(crate) const ALU_BASE: usize = IMM_BASE + 32; // 63, 32 nets
pub(crate) const ALU_OP_BASE: usize = ALU_BASE + 32; // 95, 5 nets
pub(crate) const REG_WE: usize = ALU_OP_BASE + 5; // 100
pub(crate) const MEM_RD: usize = REG_WE + 1; // 101
pub(crate) const MEM_WR: usize = MEM_RD + 1; // 102
pub(crate) const BRANCH_TAKEN: usize = MEM_WR + 1; // 103
pub(crate) const PC_BASE: usize = BRANCH_TAKEN + 1; // 104, 16 nets

/// Index into the fixed net catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct NetId(u8);

impl NetId {
    pub fn new(index: usize) -> Option<NetId> {
        (index < NET_COUNT).then_some(NetId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = NetId> {
        (0..NET_COUNT).map(|i| NetId(i as u8))
    }

    pub fn kind(self) -> NetKind {
        let i = self.index();
        if i < RD_BASE {
            NetKind::OpcodeOneHot(Opcode::ALL[i])
        } else if i < RS1_BASE {
            NetKind::RdAddrBit(i - RD_BASE)
        } else if i < RS2_BASE {
            NetKind::Rs1AddrBit(i - RS1_BASE)
        } else if i < IMM_BASE {
            NetKind::Rs2AddrBit(i - RS2_BASE)
        } else if i < ALU_BASE {
            NetKind::ImmBit(i - IMM_BASE)
        } else if i < ALU_OP_BASE {
            NetKind::AluResultBit(i - ALU_BASE)
        } else if i < REG_WE {
            NetKind::AluOpBit(i - ALU_OP_BASE)
        } else if i == REG_WE {
            NetKind::RegWriteEnable
        } else if i == MEM_RD {
            NetKind::MemRead
        } else if i == MEM_WR {
            NetKind::MemWrite
        } else if i == BRANCH_TAKEN {
            NetKind::BranchTaken
        } else {
            NetKind::PcBit(i - PC_BASE)
        }
    }

    /// Catalog name, stable across runs.
    pub fn name(self) -> String {
        match self.kind() {
            NetKind::OpcodeOneHot(op) => {
                format!("dec_opc_{}", op.mnemonic().to_ascii_lowercase())
            }
            NetKind::RdAddrBit(b) => format!("dec_rfd_adr{b}"),
            NetKind::Rs1AddrBit(b) => format!("dec_rfa_adr{b}"),
            NetKind::Rs2AddrBit(b) => format!("dec_rfb_adr{b}"),
            NetKind::ImmBit(b) => format!("dec_imm{b}"),
            NetKind::AluResultBit(b) => format!("exu_alu_r{b}"),
            NetKind::AluOpBit(b) => format!("exu_alu_op{b}"),
            NetKind::RegWriteEnable => String::from("wb_reg_we"),
            NetKind::MemRead => String::from("lsu_mem_rd"),
            NetKind::MemWrite => String::from("lsu_mem_wr"),
            NetKind::BranchTaken => String::from("exu_branch_taken"),
            NetKind::PcBit(b) => format!("if_pc{b}"),
        }
    }

    pub fn opcode_one_hot(op: Opcode) -> NetId {
        NetId((OPC_BASE + op.index()) as u8)
    }

    pub fn rd_addr_bit(bit: usize) -> NetId {
        debug_assert!(bit < 4);
        NetId((RD_BASE + bit) as u8)
    }

    pub fn rs1_addr_bit(bit: usize) -> NetId {
        debug_assert!(bit < 4);
        NetId((RS1_BASE + bit) as u8)
    }

    pub fn rs2_addr_bit(bit: usize) -> NetId {
        debug_assert!(bit < 4);
        NetId((RS2_BASE + bit) as u8)
    }

    pub fn imm_bit(bit: usize) -> NetId {
        debug_assert!(bit < 32);
        NetId((IMM_BASE + bit) as u8)
    }

    pub fn alu_result_bit(bit: usize) -> NetId {
        debug_assert!(bit < 32);
        NetId((ALU_BASE + bit) as u8)
    }

    pub fn alu_op_bit(bit: usize) -> NetId {
        debug_assert!(bit < 5);
        NetId((ALU_OP_BASE + bit) as u8)
    }

    pub fn reg_write_enable() -> NetId {
        NetId(REG_WE as u8)
    }

    pub fn mem_read() -> NetId {
        NetId(MEM_RD as u8)
    }

    pub fn mem_write() -> NetId {
        NetId(MEM_WR as u8)
    }

    pub fn branch_taken() -> NetId {
        NetId(BRANCH_TAKEN as u8)
    }

    pub fn pc_bit(bit: usize) -> NetId {
        debug_assert!(bit < 16);
        NetId((PC_BASE + bit) as u8)
    }
}

/// What a net observes in the datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    OpcodeOneHot(Opcode),
    RdAddrBit(usize),
    Rs1AddrBit(usize),
    Rs2AddrBit(usize),
    ImmBit(usize),
    AluResultBit(usize),
    AluOpBit(usize),
    RegWriteEnable,
    MemRead,
    MemWrite,
    BranchTaken,
    PcBit(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn catalog_has_120_uniquely_named_nets() {
        let names: BTreeSet<String> = NetId::all().map(|n| n.name()).collect();
        assert_eq!(names.len(), NET_COUNT);
    }

    #[test]
    fn kind_round_trips_through_constructors() {
        assert_eq!(
            NetId::opcode_one_hot(Opcode::Li).kind(),
            NetKind::OpcodeOneHot(Opcode::Li)
        );
        assert_eq!(NetId::imm_bit(31).kind(), NetKind::ImmBit(31));
        assert_eq!(NetId::alu_result_bit(0).kind(), NetKind::AluResultBit(0));
        assert_eq!(NetId::pc_bit(15).kind(), NetKind::PcBit(15));
        assert_eq!(NetId::pc_bit(15).index(), NET_COUNT - 1);
    }
}
