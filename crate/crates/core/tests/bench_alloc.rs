//! Inference after scratch allocation must not touch the heap.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use cnlu::model::InferenceScratch;

struct Counting;

static ALLOCS: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ALLOCS.fetch_add(1, Ordering::SeqCst);
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) }
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

#[test]
fn predict_loop_is_allocation_free() {
    let data = common::synthetic_splits(60, 1, 50);
    let model = common::fresh_model(&data, 64, 16, 2);
    let mut scratch = InferenceScratch::new(&model);
    let mut checksum = 0usize;
    let before = ALLOCS.load(Ordering::SeqCst);
    for _ in 0..3 {
        for ex in &data.test {
            let p = model.predict(ex, &mut scratch).unwrap();
            checksum += p.intent_logits.map_or(0, |l| l.len()) + p.valid_len;
        }
    }
    let after = ALLOCS.load(Ordering::SeqCst);
    assert!(checksum > 0);
    assert_eq!(after - before, 0, "predict allocated {} times", after - before);
}
