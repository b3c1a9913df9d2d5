# Description: pedestrian crossing between stopped buses

# First, let's get all pedestrians and buses from the dataset
pedestrians = get_objects_of_category(log_dir, category="PEDESTRIAN")
buses = get_objects_of_category(log_dir,  category="BUS")

# We need to find stopped buses
stationary_buses = stationary(buses, log_dir)

# Alternatively, we could use has_velocity with  a low threshold to find buses that are  temporarily stopped
stopped_buses = has_velocity(buses, log_dir, min_velocity=0, max_velocity=0.5)

# Now we need to find pedestrians that are crossing between the stopped buses. First, identify pedestrians that are crossing in front of a stopped bus
peds_crossing_bus = being_crossed_by(stationary_buses, pedestrians, log_dir)

# Reverse the relationship to get the pedestrians that are doing the crossing
crossing_peds = reverse_relationship(being_crossed_by)(stationary_buses, pedestrians, log_dir)

# Now we need to find pedestrians that have buses on both sides (left and right). This means the pedestrian is between buses
peds_with_bus_left = has_objects_in_relative_direction(crossing_peds, stationary_buses, log_dir, direction="left", min_number=1, within_distance=10)
peds_with_bus_right = has_objects_in_relative_direction(crossing_peds, stationary_buses, log_dir, direction="right", min_number=1, within_distance=10)

# Combine to find pedestrians with buses on both sides
peds_between_buses = scenario_and([peds_with_bus_left, peds_with_bus_right])

# Output the scenario
output_scenario(peds_between_buses, "pedestrian crossing between stopped buses", log_dir, output_dir)
