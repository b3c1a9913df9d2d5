# Description: bicycle following closely behind a vehicle
# We need to find bicycles that are following vehicles closely

# Get all bicycles and vehicles from the dataset
bicycles = get_objects_of_category(log_dir, category="BICYCLE")
vehicles = get_objects_of_category(log_dir, category="VEHICLE")

# We need to identify bicycles that are behind vehicles using get_objects_in_relative_direction to find bicycles that are behind vehicles. The bicycles should be within a reasonable distance (e.g., 10 meters) to be considered "following closely"
bicycles_behind_vehicles = get_objects_in_relative_direction(vehicles, bicycles, log_dir, direction="backward", within_distance=10, lateral_thresh=2)

# We might also want to ensure the bicycle is moving (not stationary)
moving_bicycles = scenario_not(stationary)(bicycles, log_dir)

# Combine the conditions: bicycles that are both moving and following closely behind vehicles
bicycles_following_vehicles = scenario_and([bicycles_behind_vehicles, moving_bicycles])

# Output the scenario
output_scenario(bicycles_following_vehicles, "bicycle following closely behind a vehicle", log_dir, output_dir)
