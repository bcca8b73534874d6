use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{ChunkWidth, Kernel, Scratch};
use super::toeplitz::ToeplitzSpec;
use crate::bits::BitStream;
use crate::entropy::ExtractionPlan;
use crate::error::{Error, Result};

/// Blocks handed to one rayon task by [`ExtractorState::feed_parallel`].
const PARALLEL_BATCH_BLOCKS: usize = 2048;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorCounters {
    pub blocks: u64,
    pub bits_in: u64,
    pub bits_out: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinishReport {
    pub counters: ExtractorCounters,
    /// Trailing bits that never filled a block; never hashed, never emitted.
    pub discarded_bits: usize,
}

/// Streaming Toeplitz extractor for one channel.
///
/// Input is consumed in `n`-bit blocks and each block yields `m` bits, in
/// input order. A partial block stays buffered until more input arrives or
/// [`finish`](Self::finish) drops it.
pub struct ExtractorState {
    spec: Arc<ToeplitzSpec>,
    kernel: Kernel,
    buffer: BitStream,
    counters: ExtractorCounters,
    scratch: Scratch,
}

impl ExtractorState {
    pub fn new(spec: Arc<ToeplitzSpec>) -> Self {
        Self::with_width(spec, ChunkWidth::default())
    }

    pub fn with_width(spec: Arc<ToeplitzSpec>, width: ChunkWidth) -> Self {
        let kernel = Kernel::new(&spec, width);
        Self {
            spec,
            kernel,
            buffer: BitStream::new(),
            counters: ExtractorCounters::default(),
            scratch: Scratch::default(),
        }
    }

    /// Checks that the spec matches a plan before streaming.
    pub fn for_plan(spec: Arc<ToeplitzSpec>, plan: &ExtractionPlan, width: ChunkWidth) -> Result<Self> {
        if spec.n() != plan.n_in {
            return Err(Error::LengthMismatch {
                expected: plan.n_in,
                got: spec.n(),
            });
        }
        if spec.m() != plan.n_out {
            return Err(Error::LengthMismatch {
                expected: plan.n_out,
                got: spec.m(),
            });
        }
        Ok(Self::with_width(spec, width))
    }

    pub fn spec(&self) -> &Arc<ToeplitzSpec> {
        &self.spec
    }

    pub fn counters(&self) -> ExtractorCounters {
        self.counters
    }

    pub fn buffered_bits(&self) -> usize {
        self.buffer.len()
    }

    /// Feeds input and returns the output of every block completed by it.
    pub fn extract_stream(&mut self, input: &BitStream) -> BitStream {
        let mut out = BitStream::new();
        self.feed_into(input, &mut out);
        out
    }

    pub fn feed_into(&mut self, input: &BitStream, out: &mut BitStream) {
        self.counters.bits_in += input.len() as u64;
        let n = self.spec.n();
        if self.buffer.is_empty() {
            let blocks = input.len() / n;
            self.hash_blocks(input, blocks, out);
            self.buffer = input.slice(blocks * n, input.len() - blocks * n);
        } else {
            self.buffer.extend_from(input);
            let blocks = self.buffer.len() / n;
            let buffer = std::mem::take(&mut self.buffer);
            self.hash_blocks(&buffer, blocks, out);
            self.buffer = buffer;
            self.buffer.drain_front(blocks * n);
        }
    }

    fn hash_blocks(&mut self, src: &BitStream, blocks: usize, out: &mut BitStream) {
        let n = self.spec.n();
        for b in 0..blocks {
            self.kernel.multiply_into(src, b * n, &mut self.scratch, out);
        }
        self.counters.blocks += blocks as u64;
        self.counters.bits_out += (blocks * self.spec.m()) as u64;
    }

    /// Same output as [`extract_stream`](Self::extract_stream), with block
    /// batches hashed on the rayon pool and concatenated in input order.
    pub fn feed_parallel(&mut self, input: &BitStream) -> BitStream {
        self.counters.bits_in += input.len() as u64;
        let n = self.spec.n();
        let src = if self.buffer.is_empty() {
            None
        } else {
            let mut b = std::mem::take(&mut self.buffer);
            b.extend_from(input);
            Some(b)
        };
        let src_ref = src.as_ref().unwrap_or(input);
        let blocks = src_ref.len() / n;
        let kernel = &self.kernel;
        let batches: Vec<BitStream> = (0..blocks.div_ceil(PARALLEL_BATCH_BLOCKS))
            .into_par_iter()
            .map(|batch| {
                let lo = batch * PARALLEL_BATCH_BLOCKS;
                let hi = (lo + PARALLEL_BATCH_BLOCKS).min(blocks);
                let mut scratch = Scratch::default();
                let mut out = BitStream::with_capacity((hi - lo) * kernel.m());
                for b in lo..hi {
                    kernel.multiply_into(src_ref, b * n, &mut scratch, &mut out);
                }
                out
            })
            .collect();
        let mut out = BitStream::with_capacity(blocks * self.spec.m());
        for b in &batches {
            out.extend_from(b);
        }
        self.buffer = src_ref.slice(blocks * n, src_ref.len() - blocks * n);
        self.counters.blocks += blocks as u64;
        self.counters.bits_out += (blocks * self.spec.m()) as u64;
        out
    }

    /// Ends the stream, dropping any partial block.
    pub fn finish(self) -> FinishReport {
        FinishReport {
            counters: self.counters,
            discarded_bits: self.buffer.len(),
        }
    }
}
