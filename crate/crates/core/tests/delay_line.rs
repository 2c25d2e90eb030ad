// SPDX-License-Identifier: Apache-2.0

use fhn_core::DelayBuffer;
use proptest::prelude::*;

proptest! {
    #[test]
    fn reads_return_the_value_pushed_capacity_steps_earlier(
        capacity in 0usize..64,
        fill in 0.0f64..=1.0,
        values in prop::collection::vec(0.0f64..=1.0, 1..300),
    ) {
        let mut line = DelayBuffer::with_capacity(capacity, fill);
        // The loop pushes n(t_0) before the first read.
        line.push(values[0]).unwrap();
        for k in 0..values.len() {
            let expected = if k >= capacity { values[k - capacity] } else { fill };
            prop_assert_eq!(line.read().to_bits(), expected.to_bits(), "step {}", k);
            if k + 1 < values.len() {
                line.push(values[k + 1]).unwrap();
            }
        }
    }

    #[test]
    fn delay_in_time_units_maps_to_whole_steps(steps in 0u32..500) {
        let dt = 0.01;
        let line = DelayBuffer::new(steps as f64 * dt, dt, 0.0).unwrap();
        prop_assert_eq!(line.capacity(), steps as usize);
    }
}
