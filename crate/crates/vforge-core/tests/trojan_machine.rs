//! The net-level machine against the golden interpreter, plus trace and
//! injection semantics: one-hot decode nets, SP counting oracles, no-fire
//! transparency and single-bit payload corruption.

use std::fs;
use std::path::{Path, PathBuf};

use vforge_core::isa::{execute, parse_program, parse_program_named, Program};
use vforge_core::sample::{random_inputs, random_program, SampleOptions};
use vforge_core::trojan::{
    fires, run_traced, static_probabilities, trace_nets, NetCondition, NetId, PayloadKind,
    TriggerSpec, TrojanSpec,
};

const LIMIT: u64 = 1 << 22;

fn corpus() -> Vec<(String, Program, Vec<u32>)> {
    let dir: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "s"))
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|path| {
            let name = path.file_stem().unwrap().to_str().unwrap().to_string();
            let program =
                parse_program_named(&fs::read_to_string(&path).unwrap(), &name).unwrap();
            let inputs = fs::read_to_string(path.with_extension("in"))
                .unwrap()
                .lines()
                .map(|l| l.trim().parse::<u32>().unwrap())
                .collect();
            (name, program, inputs)
        })
        .collect()
}

#[test]
fn traced_machine_matches_golden_interpreter_on_corpus() {
    for (name, program, inputs) in corpus() {
        let golden = execute(&program, &inputs, LIMIT);
        let traced = run_traced(&program, &inputs, &[], LIMIT, false);
        assert_eq!(golden, traced.result, "{name} fixture run");
        for (i, vector) in random_inputs(0xD0D0, 6, 64).iter().enumerate() {
            let golden = execute(&program, vector, LIMIT);
            let traced = run_traced(&program, vector, &[], LIMIT, false);
            assert_eq!(golden, traced.result, "{name} random vector {i}");
        }
    }
}

#[test]
fn traced_machine_matches_golden_on_random_programs() {
    let opts = SampleOptions {
        len: 40,
        memory_ops: true,
        ..SampleOptions::default()
    };
    for seed in 0..60 {
        let p = random_program(seed, &opts);
        for vector in random_inputs(seed ^ 0xABCD, 4, 16) {
            let golden = execute(&p, &vector, 10_000);
            let traced = run_traced(&p, &vector, &[], 10_000, false);
            assert_eq!(golden, traced.result, "seed {seed}");
        }
    }
}

#[test]
fn one_hot_opcode_nets_on_first_cycle() {
    let p = parse_program("LI r1, 5\nHALT").unwrap();
    let (trace, _) = trace_nets(&p, &[], LIMIT).unwrap();
    assert_eq!(trace.cycles(), 2);
    let li = NetId::opcode_one_hot(vforge_core::isa::Opcode::Li);
    assert!(trace.bit(0, li));
    for op in vforge_core::isa::Opcode::ALL {
        let net = NetId::opcode_one_hot(op);
        assert_eq!(
            trace.bit(0, net),
            op == vforge_core::isa::Opcode::Li,
            "net {} on cycle 0",
            net.name()
        );
    }
}

#[test]
fn reg_write_enable_sp_equals_writing_fraction() {
    // 3 writing instructions (LI, ADDI, LW skipped here), OUT and HALT do
    // not write: w/c = 3/5.
    let p = parse_program("LI r1, 7\nADDI r2, r1, 1\nMOV r3, r2\nOUT r3\nHALT").unwrap();
    let (trace, _) = trace_nets(&p, &[], LIMIT).unwrap();
    let sp = static_probabilities(&trace);
    assert_eq!(sp.sp(NetId::reg_write_enable()), 3.0 / 5.0);
}

#[test]
fn sp_table_matches_brute_force_recount_on_tea() {
    let all = corpus();
    let (_, tea, inputs) = all.iter().find(|(n, _, _)| n == "tea").unwrap();
    let (trace, result) = trace_nets(tea, inputs, LIMIT).unwrap();
    assert_eq!(trace.cycles() as u64, result.cycles);
    let sp = static_probabilities(&trace);
    for net in NetId::all() {
        let ones = (0..trace.cycles()).filter(|&c| trace.bit(c, net)).count();
        assert_eq!(sp.ones(net) as usize, ones, "net {}", net.name());
        assert_eq!(sp.sp(net), ones as f64 / trace.cycles() as f64);
    }
}

#[test]
fn pc_nets_follow_instruction_index() {
    let p = parse_program("LI r1, 1\nLI r2, 2\nLI r3, 3\nHALT").unwrap();
    let (trace, _) = trace_nets(&p, &[], LIMIT).unwrap();
    for c in 0..4 {
        let mut pc = 0usize;
        for b in 0..16 {
            if trace.bit(c, NetId::pc_bit(b)) {
                pc |= 1 << b;
            }
        }
        assert_eq!(pc, c);
        assert_eq!(trace.pc(c), c);
    }
}

#[test]
fn never_firing_trojan_leaves_execution_bit_identical() {
    for (name, program, inputs) in corpus() {
        // PC bit 15 never rises for small programs, so this trigger is
        // structurally dormant.
        let trojan = TrojanSpec {
            trigger: TriggerSpec::Combinational {
                nets: vec![NetId::pc_bit(15), NetId::pc_bit(14)],
            },
            payload: PayloadKind::AluResultBit { bit: 0 },
        };
        let clean = run_traced(&program, &inputs, &[], LIMIT, true);
        let armed = run_traced(&program, &inputs, &[trojan], LIMIT, true);
        assert!(armed.firings.is_empty(), "{name}");
        assert_eq!(clean.result, armed.result, "{name}");
        assert_eq!(clean.trace, armed.trace, "{name} traces must match");
        assert_eq!(clean.mem, armed.mem, "{name}");
    }
}

#[test]
fn alu_result_bit_payload_flips_exactly_one_output_bit() {
    // ADD feeding OUT; fire exactly on the ADD via an exact-pc trigger.
    let p = parse_program("IN r1\nIN r2\nADD r3, r1, r2\nOUT r3\nHALT").unwrap();
    let add_pc = 2usize;
    let mut conditions: Vec<NetCondition> = (0..16)
        .map(|b| NetCondition {
            net: NetId::pc_bit(b),
            value: add_pc >> b & 1 == 1,
        })
        .collect();
    conditions.push(NetCondition {
        net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Add),
        value: true,
    });
    let trojan = TrojanSpec {
        trigger: TriggerSpec::exact(conditions),
        payload: PayloadKind::AluResultBit { bit: 0 },
    };
    let golden = execute(&p, &[40, 2], LIMIT);
    let armed = run_traced(&p, &[40, 2], &[trojan], LIMIT, false);
    assert_eq!(armed.firings.len(), 1);
    assert_eq!(armed.firings[0].pc, add_pc);
    assert_eq!(golden.outputs.len(), 1);
    assert_eq!(armed.result.outputs.len(), 1);
    assert_eq!(golden.outputs[0] ^ armed.result.outputs[0], 1, "bit 0 only");
}

#[test]
fn immediate_bit_payload_corrupts_loaded_constant() {
    let p = parse_program("LI r1, 8\nOUT r1\nHALT").unwrap();
    let conditions = vec![NetCondition {
        net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Li),
        value: true,
    }];
    let trojan = TrojanSpec {
        trigger: TriggerSpec::exact(conditions),
        payload: PayloadKind::ImmediateBit { bit: 1 },
    };
    let armed = run_traced(&p, &[], &[trojan], LIMIT, false);
    assert_eq!(armed.result.outputs, vec![8 ^ 2]);
}

#[test]
fn branch_select_payload_inverts_branch_decision() {
    let src = "
    LI r1, 1
    LI r2, 1
    BEQ r1, r2, eq
    LI r3, 0
    JMP done
eq:
    LI r3, 777
done:
    OUT r3
    HALT
";
    let p = parse_program(src).unwrap();
    let trojan = TrojanSpec {
        trigger: TriggerSpec::exact(vec![NetCondition {
            net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Beq),
            value: true,
        }]),
        payload: PayloadKind::BranchSelect,
    };
    assert_eq!(execute(&p, &[], LIMIT).outputs, vec![777]);
    let armed = run_traced(&p, &[], &[trojan], LIMIT, false);
    assert_eq!(armed.result.outputs, vec![0], "taken branch suppressed");
}

#[test]
fn reg_write_address_payload_redirects_the_write() {
    let p = parse_program("LI r1, 5\nLI r2, 9\nOUT r1\nOUT r3\nHALT").unwrap();
    // Fire on the second LI (pc=1): write lands in r3 = r2 ^ 1 instead.
    let mut conditions: Vec<NetCondition> = (0..16)
        .map(|b| NetCondition {
            net: NetId::pc_bit(b),
            value: 1 >> b & 1 == 1,
        })
        .collect();
    conditions.push(NetCondition {
        net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Li),
        value: true,
    });
    let trojan = TrojanSpec {
        trigger: TriggerSpec::exact(conditions),
        payload: PayloadKind::RegWriteAddressBit { bit: 0 },
    };
    let armed = run_traced(&p, &[], &[trojan], LIMIT, false);
    assert_eq!(armed.result.outputs, vec![5, 9]);
}

#[test]
fn multiple_trojans_compose_independently() {
    let p = parse_program("LI r1, 0\nOUT r1\nHALT").unwrap();
    let on_li = |payload| TrojanSpec {
        trigger: TriggerSpec::exact(vec![NetCondition {
            net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Li),
            value: true,
        }]),
        payload,
    };
    let t1 = on_li(PayloadKind::ImmediateBit { bit: 0 });
    let t2 = on_li(PayloadKind::ImmediateBit { bit: 4 });
    let armed = run_traced(&p, &[], &[t1, t2], LIMIT, false);
    assert_eq!(armed.result.outputs, vec![0b10001]);
    assert_eq!(armed.firings.len(), 2);
}

#[test]
fn sequential_trigger_fires_after_ordered_steps() {
    let p = parse_program("LI r1, 1\nLI r2, 2\nADD r3, r1, r2\nOUT r3\nHALT").unwrap();
    // Step 1: any LI; step 2: the ADD. Fires on the ADD cycle and corrupts
    // its result.
    let trojan = TrojanSpec {
        trigger: TriggerSpec::Sequential {
            steps: vec![
                vforge_core::trojan::TriggerStep {
                    conditions: vec![NetCondition {
                        net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Li),
                        value: true,
                    }],
                },
                vforge_core::trojan::TriggerStep {
                    conditions: vec![NetCondition {
                        net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Add),
                        value: true,
                    }],
                },
            ],
        },
        payload: PayloadKind::AluResultBit { bit: 7 },
    };
    let armed = run_traced(&p, &[], &[trojan], LIMIT, false);
    assert_eq!(armed.firings.len(), 1);
    assert_eq!(armed.firings[0].pc, 2);
    assert_eq!(armed.result.outputs, vec![3 ^ 128]);
}

#[test]
fn trace_rows_reflect_post_payload_values() {
    let p = parse_program("LI r1, 8\nOUT r1\nHALT").unwrap();
    let trojan = TrojanSpec {
        trigger: TriggerSpec::exact(vec![NetCondition {
            net: NetId::opcode_one_hot(vforge_core::isa::Opcode::Li),
            value: true,
        }]),
        payload: PayloadKind::ImmediateBit { bit: 0 },
    };
    let armed = run_traced(&p, &[], &[trojan], LIMIT, true);
    let trace = armed.trace.unwrap();
    // The recorded immediate on the corrupted LI cycle shows the flip.
    assert!(trace.bit(0, NetId::imm_bit(0)));
    assert!(trace.bit(0, NetId::imm_bit(3)));
    // fires() over the *corrupted* trace still sees the LI opcode net.
    let spec = TriggerSpec::Combinational {
        nets: vec![NetId::opcode_one_hot(vforge_core::isa::Opcode::Li)],
    };
    assert_eq!(fires(&spec, &trace), vec![0]);
}

#[test]
fn tea_trace_matches_pinned_golden_fold() {
    // Frozen fingerprint of the cipher's clean net trace on its fixture
    // inputs: row count, outputs, and an FNV fold over all 621 rows. Any
    // change to net derivation or the datapath model shows up here.
    let all = corpus();
    let (_, tea, inputs) = all.iter().find(|(n, _, _)| n == "tea").unwrap();
    let (trace, result) = trace_nets(tea, inputs, LIMIT).unwrap();
    assert_eq!(trace.cycles(), 621);
    assert_eq!(result.outputs, vec![0x97E08832, 0x5DB61DF9]);
    let mut fold = 0xcbf29ce484222325u64;
    for c in 0..trace.cycles() {
        let row = trace.row(c);
        fold = (fold ^ (row as u64)).wrapping_mul(0x100000001b3);
        fold = (fold ^ ((row >> 64) as u64)).wrapping_mul(0x100000001b3);
    }
    assert_eq!(fold, 0xe6478c4744ae53c7);
}
