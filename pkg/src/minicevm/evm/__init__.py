"""EVM bytecode: opcodes, fees, assembly and a small-step interpreter."""
